//! Evaluable test functions with the metadata quadrature needs: jump
//! locations and (effective) support.

use statrs::function::erf::erf;

use crate::context::DunklContext;
use crate::error::{domain, Result};
use crate::sampled::SampledFunction;

/// A real function on the line.
pub trait RealFunction: Send + Sync {
    fn eval(&self, x: f64) -> f64;

    /// Points where the function or its first derivative jumps.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Interval outside which the function vanishes, or is below `1e-80`
    /// relative to its size.
    fn support(&self) -> Option<(f64, f64)> {
        None
    }

    /// `Some(r)` if the function is the indicator of `[-r, r)`, whose
    /// translates are known in closed form.
    fn centered_interval(&self) -> Option<f64> {
        None
    }
}

impl<F: Fn(f64) -> f64 + Send + Sync> RealFunction for F {
    fn eval(&self, x: f64) -> f64 {
        self(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant(pub f64);

impl RealFunction for Constant {
    fn eval(&self, _: f64) -> f64 {
        self.0
    }
}

/// Indicator of the half-open interval `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Indicator {
    pub lo: f64,
    pub hi: f64,
}

impl Indicator {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return domain(format!(
                "indicator interval must satisfy lo < hi, got [{lo}, {hi})"
            ));
        }
        Ok(Self { lo, hi })
    }

    /// `[-r, r)`, which is the ball of radius `r` up to a null set.
    pub fn centered(r: f64) -> Result<Self> {
        Self::new(-r, r)
    }
}

impl RealFunction for Indicator {
    fn eval(&self, x: f64) -> f64 {
        if x >= self.lo && x < self.hi {
            1.0
        } else {
            0.0
        }
    }
    fn breakpoints(&self) -> Vec<f64> {
        vec![self.lo, self.hi]
    }
    fn support(&self) -> Option<(f64, f64)> {
        Some((self.lo, self.hi))
    }
    fn centered_interval(&self) -> Option<f64> {
        (self.lo == -self.hi).then_some(self.hi)
    }
}

/// `amp * exp(-rate x^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian {
    pub amp: f64,
    pub rate: f64,
}

/// Exponent beyond which Gaussian tails are dropped, also under polynomial
/// weights of moderate degree.
const GAUSSIAN_TAIL_EXPONENT: f64 = 200.0;

impl Gaussian {
    pub fn new(amp: f64, rate: f64) -> Self {
        Self { amp, rate }
    }

    /// The generalized Gaussian `q_t` of a one-dimensional context.
    pub fn heat(ctx: &DunklContext, t: f64) -> Result<Self> {
        if !(t > 0.0) {
            return domain(format!("time must be positive, got {t}"));
        }
        let m = 0.5 * ctx.homogeneous_dim();
        Ok(Self {
            amp: ctx.mehta_constant * (2.0 * t).powf(-m),
            rate: 0.25 / t,
        })
    }

    pub fn tail_radius(&self) -> f64 {
        (GAUSSIAN_TAIL_EXPONENT / self.rate).sqrt()
    }
}

impl RealFunction for Gaussian {
    fn eval(&self, x: f64) -> f64 {
        self.amp * (-self.rate * x * x).exp()
    }
    fn support(&self) -> Option<(f64, f64)> {
        let r = self.tail_radius();
        Some((-r, r))
    }
}

/// `p(x) exp(-rate x^2)` with `p` given by ascending coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPoly {
    pub coeffs: Vec<f64>,
    pub rate: f64,
}

impl RealFunction for GaussianPoly {
    fn eval(&self, x: f64) -> f64 {
        let p = self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c);
        p * (-self.rate * x * x).exp()
    }
    fn support(&self) -> Option<(f64, f64)> {
        let deg = self.coeffs.len().saturating_sub(1) as f64;
        let r = ((GAUSSIAN_TAIL_EXPONENT + deg * 10.0) / self.rate).sqrt();
        Some((-r, r))
    }
}

/// Indicator of `[-half_width, half_width]` convolved with a Gaussian of
/// width `smoothing`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothedIndicator {
    pub half_width: f64,
    pub smoothing: f64,
}

impl RealFunction for SmoothedIndicator {
    fn eval(&self, x: f64) -> f64 {
        let s = self.smoothing;
        0.5 * (erf((x + self.half_width) / s) - erf((x - self.half_width) / s))
    }
    fn support(&self) -> Option<(f64, f64)> {
        let r = self.half_width + 14.0 * self.smoothing;
        Some((-r, r))
    }
}

/// Piecewise-linear interpolant of tabulated values, zero outside the table.
#[derive(Debug, Clone, PartialEq)]
pub struct Interpolated {
    table: SampledFunction<f64>,
}

impl Interpolated {
    pub fn new(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return domain("interpolation table needs at least two nodes");
        }
        Ok(Self {
            table: SampledFunction::new(vec![nodes], values)?,
        })
    }

    pub fn table(&self) -> &SampledFunction<f64> {
        &self.table
    }
}

impl RealFunction for Interpolated {
    fn eval(&self, x: f64) -> f64 {
        self.table.interpolate(x)
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.table.nodes().to_vec()
    }
    fn support(&self) -> Option<(f64, f64)> {
        Some(self.table.bounds()[0])
    }
}

/// `factor * f`.
#[derive(Debug, Clone, Copy)]
pub struct Scaled<F> {
    pub factor: f64,
    pub inner: F,
}

impl<F: RealFunction> RealFunction for Scaled<F> {
    fn eval(&self, x: f64) -> f64 {
        self.factor * self.inner.eval(x)
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.inner.breakpoints()
    }
    fn support(&self) -> Option<(f64, f64)> {
        self.inner.support()
    }
}

/// Pointwise sum of two functions.
#[derive(Debug, Clone, Copy)]
pub struct Sum<F, G>(pub F, pub G);

impl<F: RealFunction, G: RealFunction> RealFunction for Sum<F, G> {
    fn eval(&self, x: f64) -> f64 {
        self.0.eval(x) + self.1.eval(x)
    }
    fn breakpoints(&self) -> Vec<f64> {
        let mut b = self.0.breakpoints();
        b.extend(self.1.breakpoints());
        b
    }
    fn support(&self) -> Option<(f64, f64)> {
        match (self.0.support(), self.1.support()) {
            (Some(a), Some(b)) => Some((a.0.min(b.0), a.1.max(b.1))),
            _ => None,
        }
    }
}

/// A real function on `R^d`.
pub trait FieldFunction: Send + Sync {
    fn eval(&self, x: &[f64]) -> f64;
}

impl<F: Fn(&[f64]) -> f64 + Send + Sync> FieldFunction for F {
    fn eval(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

/// Tensor product `prod_j f_j(x_j)`.
pub struct Product(pub Vec<Box<dyn RealFunction>>);

impl Product {
    pub fn factors(&self) -> &[Box<dyn RealFunction>] {
        &self.0
    }
}

impl FieldFunction for Product {
    fn eval(&self, x: &[f64]) -> f64 {
        self.0.iter().zip(x).map(|(f, &xj)| f.eval(xj)).product()
    }
}

/// The generalized Gaussian `q_t` on `R^d`, written as a product so that the
/// coordinate-wise machinery applies.
pub fn heat_gaussian_product(ctx: &DunklContext, t: f64) -> Result<Product> {
    let g = Gaussian::heat(ctx, t)?;
    let mut factors: Vec<Box<dyn RealFunction>> = Vec::with_capacity(ctx.d);
    factors.push(Box::new(g));
    for _ in 1..ctx.d {
        factors.push(Box::new(Gaussian::new(1.0, g.rate)));
    }
    Ok(Product(factors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn indicator_is_half_open() {
        let f = Indicator::new(1.0, 2.0).unwrap();
        assert_eq!(f.eval(1.0), 1.0);
        assert_eq!(f.eval(2.0), 0.0);
        assert!(Indicator::new(2.0, 2.0).is_err());
    }

    #[test]
    fn heat_gaussian_peak() {
        let ctx = DunklContext::one_dim(0.0).unwrap();
        let q = Gaussian::heat(&ctx, 0.5).unwrap();
        assert_relative_eq!(
            q.eval(0.0),
            1.0 / (2.0 * std::f64::consts::PI).sqrt(),
            max_relative = 1e-14
        );
        assert!(Gaussian::heat(&ctx, 0.0).is_err());
    }

    #[test]
    fn smoothed_indicator_shape() {
        let f = SmoothedIndicator {
            half_width: 1.0,
            smoothing: 0.05,
        };
        assert_relative_eq!(f.eval(0.0), 1.0, max_relative = 1e-12);
        assert_relative_eq!(f.eval(1.0), 0.5, max_relative = 1e-6);
        assert!(f.eval(2.0) < 1e-12);
    }

    #[test]
    fn polynomial_gaussian() {
        let f = GaussianPoly {
            coeffs: vec![0.0, 1.0],
            rate: 1.0,
        };
        assert_relative_eq!(f.eval(1.0), (-1f64).exp(), max_relative = 1e-15);
    }

    #[test]
    fn product_of_factors() {
        let p = Product(vec![Box::new(Constant(2.0)), Box::new(|x: f64| x)]);
        assert_eq!(p.eval(&[5.0, 3.0]), 6.0);
    }
}
