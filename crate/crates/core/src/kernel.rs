//! The Dunkl kernel of `Z_2^d` and the coordinate Dunkl operators.
//!
//! In one variable `E_k(x, y) = int e^{xyt} psi_k(t) dt` depends on the
//! product `c = xy` only. For moderate `|c|` the integral is evaluated with
//! the Gauss–Jacobi rule of the weight `(1-t^2)^(k-1)`; for large real `|c|`
//! the mass concentrates at one endpoint and the substitution
//! `t = +-(1 - u/|c|)` turns it into a generalized Gauss–Laguerre integral.
//! The `d`-dimensional kernel is the product of the coordinate kernels.

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::context::DunklContext;
use crate::error::{domain, DunklError, Result};
use crate::quadrature::{gauss_laguerre, jacobi_rule, GaussRule, JacobiRule};
use crate::sampled::SampledFunction;
use crate::special::ln_beta;

pub const DEFAULT_ORDER: usize = 64;
pub const DEFAULT_STEP: f64 = 1e-3;

/// Above this `|xy|` real kernels use the Laguerre form.
const LAGUERRE_SWITCH: f64 = 60.0;
const LAGUERRE_ORDER: usize = 128;
/// Number of doublings available above the base order.
const LADDER: usize = 7;

/// Kernel of one coordinate with scalar multiplicity `kappa`.
#[derive(Debug, Clone)]
pub struct CoordinateKernel {
    kappa: f64,
    base_order: usize,
    ln_beta: f64,
    ladder: Vec<OnceLock<JacobiRule>>,
    laguerre_pos: OnceLock<GaussRule>,
    laguerre_neg: OnceLock<GaussRule>,
}

impl CoordinateKernel {
    pub fn new(kappa: f64, base_order: usize) -> Result<Self> {
        if !(kappa >= 0.0) {
            return domain(format!("multiplicity must be nonnegative, got {kappa}"));
        }
        if base_order == 0 {
            return domain("quadrature order must be at least 1");
        }
        let ln_b = if kappa > 0.0 {
            ln_beta(kappa, 0.5)
        } else {
            0.0
        };
        Ok(Self {
            kappa,
            base_order,
            ln_beta: ln_b,
            ladder: (0..LADDER).map(|_| OnceLock::new()).collect(),
            laguerre_pos: OnceLock::new(),
            laguerre_neg: OnceLock::new(),
        })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn base_order(&self) -> usize {
        self.base_order
    }

    fn ladder_order(&self, level: usize) -> usize {
        self.base_order << level
    }

    /// Rule at ladder level `level` (`base_order * 2^level` nodes).
    pub fn rule(&self, level: usize) -> &JacobiRule {
        let level = level.min(LADDER - 1);
        self.ladder[level].get_or_init(|| {
            jacobi_rule(self.kappa, self.ladder_order(level)).expect("validated multiplicity")
        })
    }

    /// Smallest ladder level whose rule resolves `e^{ict}` or `e^{ct}` for
    /// `|c| <= c_max`.
    pub fn level_for(&self, c_max: f64) -> usize {
        let need = 0.75 * c_max.abs() + 32.0;
        (0..LADDER)
            .find(|&l| self.ladder_order(l) as f64 >= need)
            .unwrap_or(LADDER - 1)
    }

    fn laguerre(&self, positive: bool) -> &GaussRule {
        if positive {
            self.laguerre_pos.get_or_init(|| {
                gauss_laguerre(self.kappa - 1.0, LAGUERRE_ORDER).expect("validated multiplicity")
            })
        } else {
            self.laguerre_neg.get_or_init(|| {
                gauss_laguerre(self.kappa, LAGUERRE_ORDER).expect("validated multiplicity")
            })
        }
    }

    /// `E_k(c) e^{-shift}` for real `c`, using the fixed rule chosen by `|c|`.
    pub fn scaled(&self, c: f64, shift: f64) -> f64 {
        if self.kappa == 0.0 || c == 0.0 {
            return (c - shift).exp();
        }
        if c.abs() <= LAGUERRE_SWITCH {
            return self.jacobi_scaled(c, shift, self.level_for(c));
        }
        let a = c.abs();
        if c > 0.0 {
            // t = 1 - u/c
            let k = self.kappa;
            let s: f64 = self.laguerre(true).integrate(|u| {
                if u < 2.0 * a {
                    (2.0 - u / a).powf(k)
                } else {
                    0.0
                }
            });
            (a - shift - k * a.ln() - self.ln_beta).exp() * s
        } else {
            // t = -1 + u/|c|
            let k = self.kappa;
            let s: f64 = self.laguerre(false).integrate(|u| {
                if u < 2.0 * a {
                    (2.0 - u / a).powf(k - 1.0)
                } else {
                    0.0
                }
            });
            (a - shift - (k + 1.0) * a.ln() - self.ln_beta).exp() * s
        }
    }

    pub fn jacobi_scaled(&self, c: f64, shift: f64, level: usize) -> f64 {
        if self.kappa == 0.0 || c == 0.0 {
            return (c - shift).exp();
        }
        self.rule(level)
            .psi_nodes()
            .map(|(t, w)| w * (c * t - shift).exp())
            .sum()
    }

    /// `E_k(c)` for real `c`.
    pub fn real(&self, c: f64) -> f64 {
        self.scaled(c, 0.0)
    }

    /// `E_k(ic)` with the rule at `level`. Symmetric nodes are paired so the
    /// odd parts cancel exactly: `2 w cos(ct) + 2i w t sin(ct)`.
    pub fn imag_at(&self, c: f64, level: usize) -> Complex64 {
        if self.kappa == 0.0 || c == 0.0 {
            return Complex64::new(c.cos(), c.sin());
        }
        let rule = self.rule(level);
        let n = rule.order;
        let inv = 1.0 / rule.beta_norm;
        let (mut re, mut im) = (0.0, 0.0);
        for i in n.div_ceil(2)..n {
            let t = rule.nodes[i];
            let w = rule.weights[i];
            let (s, co) = (c * t).sin_cos();
            re += w * co;
            im += w * t * s;
        }
        if n % 2 == 1 {
            // node at t = 0 contributes w * 1 to the real part once
            re = 2.0 * re + rule.weights[n / 2];
        } else {
            re *= 2.0;
        }
        Complex64::new(re * inv, 2.0 * im * inv)
    }

    /// `E_k(ic)` with the deterministic order chosen from `|c|`.
    pub fn imag(&self, c: f64) -> Complex64 {
        self.imag_at(c, self.level_for(c))
    }
}

/// Kernel evaluator for a context, one coordinate kernel per axis.
#[derive(Debug, Clone)]
pub struct KernelEvaluator {
    ctx: DunklContext,
    coords: Vec<CoordinateKernel>,
}

impl KernelEvaluator {
    pub fn new(ctx: &DunklContext) -> Result<Self> {
        Self::with_order(ctx, DEFAULT_ORDER)
    }

    pub fn with_order(ctx: &DunklContext, order: usize) -> Result<Self> {
        let coords = ctx
            .kappa()
            .iter()
            .map(|&k| CoordinateKernel::new(k, order))
            .collect::<Result<_>>()?;
        Ok(Self {
            ctx: ctx.clone(),
            coords,
        })
    }

    pub fn context(&self) -> &DunklContext {
        &self.ctx
    }

    pub fn coordinate(&self, j: usize) -> &CoordinateKernel {
        &self.coords[j]
    }

    /// One-dimensional kernel `E_k(x, y)` of the first coordinate. The rule
    /// is doubled until successive values agree to `1e-12`.
    pub fn dunkl_kernel_1d(&self, x: f64, y: f64) -> f64 {
        let ck = &self.coords[0];
        let c = x * y;
        if c == 0.0 {
            return 1.0;
        }
        if ck.kappa == 0.0 || c.abs() > LAGUERRE_SWITCH {
            return ck.real(c);
        }
        let shift = c.abs();
        let mut level = ck.level_for(c);
        let mut prev = ck.jacobi_scaled(c, shift, level);
        while level + 1 < LADDER {
            level += 1;
            let next = ck.jacobi_scaled(c, shift, level);
            let done = (next - prev).abs() <= 1e-12 * next.abs();
            prev = next;
            if done {
                break;
            }
        }
        prev * shift.exp()
    }

    /// `E_k(ix, y)`, doubled until successive values agree to `1e-12`.
    pub fn dunkl_kernel_im(&self, x: f64, y: f64) -> Complex64 {
        let ck = &self.coords[0];
        let c = x * y;
        if c == 0.0 {
            return Complex64::new(1.0, 0.0);
        }
        if ck.kappa == 0.0 {
            return ck.imag(c);
        }
        let mut level = ck.level_for(c);
        let mut prev = ck.imag_at(c, level);
        while level + 1 < LADDER {
            level += 1;
            let next = ck.imag_at(c, level);
            let done = (next - prev).norm() <= 1e-12;
            prev = next;
            if done {
                break;
            }
        }
        prev
    }

    fn check_dims(&self, x: &[f64], y: &[f64]) -> Result<()> {
        for v in [x, y] {
            if v.len() != self.ctx.d {
                return Err(DunklError::DimensionMismatch {
                    expected: self.ctx.d,
                    got: v.len(),
                });
            }
        }
        Ok(())
    }

    /// `E_k(x, y) = prod_j E_{k_j}(x_j y_j)`.
    pub fn dunkl_kernel_nd(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_dims(x, y)?;
        Ok(self
            .coords
            .iter()
            .zip(x.iter().zip(y))
            .map(|(ck, (a, b))| ck.real(a * b))
            .product())
    }

    /// `E_k(ix, y) = prod_j E_{k_j}(i x_j y_j)`.
    pub fn dunkl_kernel_nd_im(&self, x: &[f64], y: &[f64]) -> Result<Complex64> {
        self.check_dims(x, y)?;
        Ok(self
            .coords
            .iter()
            .zip(x.iter().zip(y))
            .map(|(ck, (a, b))| ck.imag(a * b))
            .fold(Complex64::new(1.0, 0.0), |acc, v| acc * v))
    }

    /// Maximum over `nodes` of `|T E(., y)(x) - y E(x, y)| / max(1, |E(x, y)|)`
    /// for the first coordinate, with the five-point stencil of step `h`.
    pub fn eigen_residual(&self, y: f64, nodes: &[f64], h: f64) -> Result<f64> {
        if !(h > 0.0) {
            return domain(format!("finite-difference step must be positive, got {h}"));
        }
        let ck = &self.coords[0];
        let x_max = nodes.iter().fold(0.0f64, |m, x| m.max(x.abs())) + 2.0 * h;
        let level = ck.level_for(x_max * y);
        let e = |x: f64| {
            let c = x * y;
            if c.abs() <= LAGUERRE_SWITCH {
                ck.jacobi_scaled(c, 0.0, level)
            } else {
                ck.real(c)
            }
        };
        let mut worst = 0.0f64;
        for &x in nodes {
            let t = dunkl_operator_at(e, ck.kappa, x, h);
            let ex = e(x);
            let r = (t - y * ex).abs() / ex.abs().max(1.0);
            worst = worst.max(r);
        }
        Ok(worst)
    }
}

/// Centered five-point derivative.
pub fn derivative_5pt(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

/// `T f(x) = f'(x) + k (f(x) - f(-x)) / x`, with `(1 + 2k) f'(0)` at the origin.
pub fn dunkl_operator_at(f: impl Fn(f64) -> f64, kappa: f64, x: f64, h: f64) -> f64 {
    let d = derivative_5pt(&f, x, h);
    if x == 0.0 {
        (1.0 + 2.0 * kappa) * d
    } else {
        d + kappa * (f(x) - f(-x)) / x
    }
}

/// Dunkl operator applied to samples on a uniform grid symmetric about 0.
/// Interior nodes use the centered stencil; the two outermost nodes on each
/// side use one-sided five-point stencils.
pub fn dunkl_operator_1d(f: &SampledFunction<f64>, kappa: f64) -> Result<SampledFunction<f64>> {
    if f.dim() != 1 {
        return domain("Dunkl operator on samples needs a one-dimensional grid");
    }
    let x = f.nodes();
    let n = x.len();
    if n < 5 {
        return domain("Dunkl operator on samples needs at least 5 nodes");
    }
    let scale = x[n - 1].abs().max(x[0].abs());
    let h = (x[n - 1] - x[0]) / (n - 1) as f64;
    for i in 0..n {
        if (x[i] + x[n - 1 - i]).abs() > 1e-12 * scale {
            return domain("grid must be symmetric about 0");
        }
        if i > 0 && ((x[i] - x[i - 1]) - h).abs() > 1e-9 * h {
            return domain("grid must be uniformly spaced");
        }
    }
    let v = f.values();
    let deriv = |i: usize| -> f64 {
        if i >= 2 && i + 2 < n {
            (v[i - 2] - 8.0 * v[i - 1] + 8.0 * v[i + 1] - v[i + 2]) / (12.0 * h)
        } else if i < 2 {
            (-25.0 * v[i] + 48.0 * v[i + 1] - 36.0 * v[i + 2] + 16.0 * v[i + 3] - 3.0 * v[i + 4])
                / (12.0 * h)
        } else {
            (25.0 * v[i] - 48.0 * v[i - 1] + 36.0 * v[i - 2] - 16.0 * v[i - 3] + 3.0 * v[i - 4])
                / (12.0 * h)
        }
    };
    let out = (0..n)
        .map(|i| {
            let d = deriv(i);
            if x[i].abs() <= 1e-12 * scale {
                (1.0 + 2.0 * kappa) * d
            } else {
                d + kappa * (v[i] - v[n - 1 - i]) / x[i]
            }
        })
        .collect();
    f.with_values(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::MultiplicityVector;
    use crate::quadrature::TanhSinh;
    use crate::sampled::symmetric_grid;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn ev(k: f64) -> KernelEvaluator {
        KernelEvaluator::new(&DunklContext::one_dim(k).unwrap()).unwrap()
    }

    /// Power series `sum c^j / b_j` with `b_{2m} = 4^m m! (k+1/2)_m` and
    /// `b_{2m+1} = 2^{2m+1} m! (k+1/2)_{m+1}`.
    fn series(k: f64, c: Complex64) -> Complex64 {
        let mut sum = Complex64::new(0.0, 0.0);
        let mut term = Complex64::new(1.0, 0.0);
        for j in 0..2000 {
            sum += term;
            let m = (j / 2) as f64;
            let ratio = if j % 2 == 0 {
                2.0 * (k + 0.5 + m)
            } else {
                2.0 * (m + 1.0)
            };
            term *= c / ratio;
            if term.norm() < 1e-18 * sum.norm() && j > 10 {
                break;
            }
        }
        sum
    }

    /// Tanh-sinh quadrature of the defining integral, scaled by `e^{-|c|}`.
    fn direct(k: f64, c: f64) -> f64 {
        let ts = TanhSinh::new(1.0 / 64.0);
        let b = crate::special::beta(k, 0.5);
        ts.integrate(-1.0, 1.0, |p| {
            let t = p.x;
            (c * t - c.abs()).exp() * p.from_lo * (p.from_lo * p.from_hi).powf(k - 1.0)
        }) / b
    }

    #[test]
    fn special_values() {
        assert_eq!(ev(1.3).dunkl_kernel_1d(0.0, 7.0), 1.0);
        assert_relative_eq!(
            ev(1.0).dunkl_kernel_1d(1.0, 1.0),
            1f64.cosh(),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            ev(0.0).dunkl_kernel_1d(1.5, -0.7),
            (-1.05f64).exp(),
            max_relative = 1e-15
        );
        let z = ev(1.0).dunkl_kernel_im(1.0, 1.0);
        assert_relative_eq!(z.re, 1f64.sin(), max_relative = 1e-14);
        // int t sin t (1+t) dt / 2 over (-1, 1) = sin 1 - cos 1
        assert_relative_eq!(z.im, 1f64.sin() - 1f64.cos(), max_relative = 1e-13);
        assert_eq!(ev(0.4).dunkl_kernel_im(0.0, 3.0), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn matches_power_series() {
        for &k in &[0.3, 0.5, 1.0, 2.5] {
            let e = ev(k);
            for &c in &[-8.0, -3.0, -0.5, 0.7, 4.0, 12.0, 30.0] {
                let s = series(k, Complex64::new(c, 0.0)).re;
                assert_relative_eq!(e.dunkl_kernel_1d(c, 1.0), s, max_relative = 1e-11);
            }
            for &c in &[-6.0, -1.0, 0.3, 2.0, 7.5] {
                let s = series(k, Complex64::new(0.0, c));
                let v = e.dunkl_kernel_im(c, 1.0);
                assert!((v - s).norm() < 1e-11, "k={k} c={c} {v} {s}");
            }
        }
    }

    #[test]
    fn large_arguments_match_direct_quadrature() {
        for &k in &[0.3, 1.0, 2.5, 7.0] {
            let ck = CoordinateKernel::new(k, DEFAULT_ORDER).unwrap();
            for &c in &[-400.0, -90.0, -61.0, -55.0, 55.0, 61.0, 90.0, 400.0, 2500.0] {
                let v = ck.scaled(c, c.abs());
                let o = direct(k, c);
                assert_relative_eq!(v, o, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn product_kernel() {
        let ctx = DunklContext::new(2, MultiplicityVector::new(vec![1.0, 1.0]).unwrap()).unwrap();
        let e = KernelEvaluator::new(&ctx).unwrap();
        let v = e.dunkl_kernel_nd(&[1.0, 1.0], &[1.0, 1.0]).unwrap();
        assert_relative_eq!(v, 1f64.cosh().powi(2), max_relative = 1e-14);
        assert_eq!(e.dunkl_kernel_nd(&[0.0, 0.0], &[3.0, -2.0]).unwrap(), 1.0);
        assert!(e.dunkl_kernel_nd(&[1.0], &[1.0, 2.0]).is_err());
        let ctx0 = DunklContext::new(2, MultiplicityVector::new(vec![0.0, 0.0]).unwrap()).unwrap();
        let e0 = KernelEvaluator::new(&ctx0).unwrap();
        let v = e0.dunkl_kernel_nd(&[0.5, 1.5], &[2.0, -1.0]).unwrap();
        assert_relative_eq!(v, (-0.5f64).exp(), max_relative = 1e-15);
    }

    #[test]
    fn dunkl_operator_on_samples() {
        let nodes = symmetric_grid(2.0, 41);
        let sq = SampledFunction::from_fn_1d(nodes.clone(), |x| x * x).unwrap();
        let t = dunkl_operator_1d(&sq, 0.7).unwrap();
        for (x, v) in nodes.iter().zip(t.values()) {
            assert!((v - 2.0 * x).abs() < 1e-12);
        }
        let id = SampledFunction::from_fn_1d(nodes.clone(), |x| x).unwrap();
        let t = dunkl_operator_1d(&id, 1.0).unwrap();
        assert!(t.values().iter().all(|v| (v - 3.0).abs() < 1e-12));
        let lopsided = SampledFunction::from_fn_1d(vec![-1.0, 0.0, 1.0, 2.0, 3.0], |x| x).unwrap();
        assert!(dunkl_operator_1d(&lopsided, 1.0).is_err());
    }

    #[test]
    fn eigen_residuals() {
        let nodes = symmetric_grid(5.0, 51);
        assert!(ev(0.0).eigen_residual(1.0, &nodes, DEFAULT_STEP).unwrap() < 1e-9);
        assert!(ev(1.0).eigen_residual(1.0, &nodes, DEFAULT_STEP).unwrap() < 1e-6);
        assert_eq!(
            ev(0.8).eigen_residual(0.0, &nodes, DEFAULT_STEP).unwrap(),
            0.0
        );
    }

    #[test]
    fn eigen_residual_has_fourth_order() {
        let e = ev(1.0);
        let nodes = [0.3, 0.9, 1.7];
        let hs = [0.2, 0.1, 0.05];
        let r: Vec<f64> = hs
            .iter()
            .map(|&h| e.eigen_residual(2.0, &nodes, h).unwrap())
            .collect();
        let slope = (r[0].ln() - r[2].ln()) / (hs[0].ln() - hs[2].ln());
        assert!((slope - 4.0).abs() < 0.5, "{slope} {r:?}");
    }

    #[test]
    fn small_multiplicity_is_close_to_exponential() {
        let e = ev(1e-4);
        for &c in &[-4.0, -2.0, -0.5, 0.5, 2.0, 4.0] {
            let v = e.dunkl_kernel_1d(c, 1.0);
            assert!((v - c.exp()).abs() <= 1e-3 * c.exp().max(1.0), "{c} {v}");
        }
    }

    proptest! {
        #[test]
        fn imaginary_kernel_is_bounded(
            k in prop::sample::select(vec![0.3, 0.5, 1.0, 2.5]),
            x in -10.0f64..10.0,
            y in -10.0f64..10.0,
        ) {
            prop_assert!(ev(k).dunkl_kernel_im(x, y).norm() <= 1.0 + 1e-12);
        }

        #[test]
        fn kernel_is_symmetric(k in 0.0f64..3.0, x in -10.0f64..10.0, y in -10.0f64..10.0) {
            let e = ev(k);
            let a = e.dunkl_kernel_1d(x, y);
            let b = e.dunkl_kernel_1d(y, x);
            prop_assert!((a - b).abs() <= 1e-12 * a.abs());
            prop_assert!(a > 0.0);
        }

        #[test]
        fn doubling_the_rule_is_stable(k in 0.05f64..4.0, c in -40.0f64..40.0) {
            let ck = CoordinateKernel::new(k, DEFAULT_ORDER).unwrap();
            let l = ck.level_for(c);
            let a = ck.jacobi_scaled(c, c.abs(), l);
            let b = ck.jacobi_scaled(c, c.abs(), l + 1);
            prop_assert!((a - b).abs() < 1e-10 * a);
        }
    }
}
