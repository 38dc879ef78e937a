//! Rational Dunkl analysis for the sign-change group `Z_2^d`.
//!
//! The crate provides the weighted measure and its constants, the Dunkl
//! kernel and operators, the Dunkl transform, the explicit one-dimensional
//! translation and its coordinate-wise extension, the Dunkl heat semigroup,
//! and numerical estimators for the associated maximal operators.

pub mod context;
pub mod error;
pub mod functions;
pub mod heat;
pub mod kernel;
pub mod maximal;
pub mod quadrature;
pub mod sampled;
pub mod special;
pub mod transform;
pub mod translation;

pub use context::{make_context, DunklContext, MultiplicityVector};
pub use error::{DunklError, Result};
