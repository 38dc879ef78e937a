//! Reflection-invariant weighted measure on `R^d` for the sign-change group.
//!
//! The weight is `h(x)^2 = prod_j |x_j|^(2 k_j)`. The three normalising
//! constants are computed by independent routes (spherical integration,
//! Gaussian integration, Dirichlet integral over the ball) so that the
//! identities linking them are a genuine consistency check.

use serde::Serialize;

use crate::error::{domain, DunklError, Result};
use crate::quadrature::ExpSinh;
use crate::special::{gamma, ln_beta, ln_gamma};

/// Nonnegative multiplicity, one entry per coordinate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiplicityVector(Vec<f64>);

impl MultiplicityVector {
    pub fn new(kappa: Vec<f64>) -> Result<Self> {
        if let Some(k) = kappa.iter().find(|k| !(k.is_finite() && **k >= 0.0)) {
            return domain(format!(
                "multiplicity entries must be finite and nonnegative, got {k}"
            ));
        }
        Ok(Self(kappa))
    }

    pub fn uniform(d: usize, kappa: f64) -> Result<Self> {
        Self::new(vec![kappa; d])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn gamma(&self) -> f64 {
        self.0.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DunklContext {
    pub d: usize,
    pub kappa: MultiplicityVector,
    pub gamma: f64,
    /// Weighted surface measure of the unit sphere.
    pub sphere_constant: f64,
    /// Reciprocal of the weighted Gaussian integral `int e^{-|x|^2/2} h^2 dx`.
    pub mehta_constant: f64,
    pub unit_ball_measure: f64,
}

/// Relative defects of the identities tying the context constants together.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityDefects {
    /// `mu(B_1)` against `a(S) / n`.
    pub ball_vs_sphere: f64,
    /// `1/c` against `2^{n/2-1} Gamma(n/2) a(S)`.
    pub mehta_vs_sphere: f64,
    /// Time integral of the heat kernel on the unit sphere against
    /// `c 2^{n/2} Gamma(n/2 - 1) / 4`; `None` when the integral diverges
    /// (`n <= 2`).
    pub sphere_heat_integral: Option<f64>,
}

pub fn make_context(d: usize, kappa: MultiplicityVector) -> Result<DunklContext> {
    DunklContext::new(d, kappa)
}

impl DunklContext {
    pub fn new(d: usize, kappa: MultiplicityVector) -> Result<Self> {
        if d == 0 {
            return domain("d must be >= 1");
        }
        if kappa.len() != d {
            return Err(DunklError::DimensionMismatch {
                expected: d,
                got: kappa.len(),
            });
        }
        let k = kappa.as_slice();
        let gamma_sum = kappa.gamma();
        let sphere_constant = sphere_constant(k);
        let mehta_constant = 1.0 / gaussian_integral(k);
        let unit_ball_measure = ball_dirichlet(k);
        Ok(Self {
            d,
            kappa,
            gamma: gamma_sum,
            sphere_constant,
            mehta_constant,
            unit_ball_measure,
        })
    }

    /// One-dimensional context with a scalar multiplicity.
    pub fn one_dim(kappa: f64) -> Result<Self> {
        Self::new(1, MultiplicityVector::new(vec![kappa])?)
    }

    /// Homogeneous dimension `d + 2 gamma`.
    pub fn homogeneous_dim(&self) -> f64 {
        self.d as f64 + 2.0 * self.gamma
    }

    pub fn kappa(&self) -> &[f64] {
        self.kappa.as_slice()
    }

    /// `prod_j |x_j|^{2 k_j}` with `0^0 = 1`.
    pub fn weight(&self, x: &[f64]) -> f64 {
        self.kappa()
            .iter()
            .zip(x)
            .map(|(&k, &xj)| {
                if k == 0.0 {
                    1.0
                } else {
                    xj.abs().powf(2.0 * k)
                }
            })
            .product()
    }

    pub fn ball_measure(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return domain(format!("ball radius must be positive, got {r}"));
        }
        Ok(r.powf(self.homogeneous_dim()) * self.unit_ball_measure)
    }

    /// Value of the heat kernel `q_t` on the unit sphere.
    pub fn sphere_heat_value(&self, t: f64) -> f64 {
        let m = 0.5 * self.homogeneous_dim();
        self.mehta_constant * (-m * (2.0 * t).ln() - 0.25 / t).exp()
    }

    pub fn identity_defects(&self) -> IdentityDefects {
        let n = self.homogeneous_dim();
        let m = 0.5 * n;
        let rel = |a: f64, b: f64| ((a - b) / b).abs();
        let ball = rel(self.unit_ball_measure, self.sphere_constant / n);
        let mehta = rel(
            1.0 / self.mehta_constant,
            ((m - 1.0) * std::f64::consts::LN_2 + ln_gamma(m)).exp() * self.sphere_constant,
        );
        let heat = (m > 1.0).then(|| {
            let integral = sphere_heat_time_integral(self.mehta_constant, m);
            let closed = self.mehta_constant * 2f64.powf(m) / 4.0 * gamma(m - 1.0);
            rel(integral, closed)
        });
        IdentityDefects {
            ball_vs_sphere: ball,
            mehta_vs_sphere: mehta,
            sphere_heat_integral: heat,
        }
    }
}

/// `int_0^inf c (2t)^{-m} e^{-1/4t} dt`, integrated in `u = 1/4t`:
/// `c 2^m / 4 int_0^inf u^{m-2} e^{-u} du`. One integration by parts
/// removes the `u^{m-2}` singularity at the origin.
fn sphere_heat_time_integral(c: f64, m: f64) -> f64 {
    let es = ExpSinh::default();
    let v = es.integrate(0.0, |u, _| (((m - 1.0) * u.ln()) - u).exp()) / (m - 1.0);
    c * 2f64.powf(m) / 4.0 * v
}

/// Weighted measure of `S^{d-1}` in hyperspherical coordinates.
///
/// With `x_1 = cos(theta)` the sphere splits into a polar factor and a
/// scaled copy of `S^{d-2}`, giving
/// `a(S^{d-1}) = B(k_1 + 1/2, (d-1)/2 + g') a(S^{d-2})` where `g'` sums the
/// remaining multiplicities. `a(S^0) = 2`.
fn sphere_constant(kappa: &[f64]) -> f64 {
    let d = kappa.len();
    let mut log_a = std::f64::consts::LN_2;
    for j in 0..d.saturating_sub(1) {
        let rest_dim = (d - j - 1) as f64;
        let rest_gamma: f64 = kappa[j + 1..].iter().sum();
        log_a += ln_beta(kappa[j] + 0.5, 0.5 * rest_dim + rest_gamma);
    }
    log_a.exp()
}

/// `int e^{-|x|^2/2} h(x)^2 dx = prod_j 2^{k_j + 1/2} Gamma(k_j + 1/2)`.
fn gaussian_integral(kappa: &[f64]) -> f64 {
    kappa
        .iter()
        .map(|&k| ((k + 0.5) * std::f64::consts::LN_2 + ln_gamma(k + 0.5)).exp())
        .product()
}

/// Dirichlet integral `int_{|x|<1} h(x)^2 dx = prod Gamma(k_j + 1/2) / Gamma(n/2 + 1)`.
fn ball_dirichlet(kappa: &[f64]) -> f64 {
    let n = kappa.len() as f64 + 2.0 * kappa.iter().sum::<f64>();
    let num: f64 = kappa.iter().map(|&k| ln_gamma(k + 0.5)).sum();
    (num - ln_gamma(0.5 * n + 1.0)).exp()
}
