//! Quadrature rules.
//!
//! Gaussian rules are built with the Golub–Welsch algorithm: the nodes are
//! the eigenvalues of the Jacobi matrix of the three-term recurrence and the
//! weights are `mu0 * v0^2`, where `v0` is the first component of each
//! normalised eigenvector. Only that first row of the eigenvector matrix is
//! tracked, so construction is `O(n^2)`.
//!
//! Double-exponential rules (tanh-sinh, exp-sinh) are used for integrands
//! with algebraic endpoint singularities. They hand the integrand the exact
//! distance to each endpoint, so singular factors such as `(b - x)^(k-1)` can
//! be evaluated without cancellation.

use crate::error::{domain, DunklError, Result};
use crate::special::{ln_beta, ln_gamma};

/// Nodes and weights of an interpolatory rule.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Exponents `(alpha, beta)` of the weight `(1-t)^alpha (1+t)^beta`
    /// on the reference interval `[-1, 1]`; `(0, 0)` for Legendre.
    pub exponents: (f64, f64),
}

impl GaussRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Affine image of a `[-1, 1]` rule on `[a, b]`. The weight function is
    /// mapped along with the nodes: `(b-y)^alpha (y-a)^beta`.
    pub fn mapped(&self, a: f64, b: f64) -> GaussRule {
        let half = 0.5 * (b - a);
        let (al, be) = self.exponents;
        let scale = half.powf(1.0 + al + be);
        GaussRule {
            nodes: self.nodes.iter().map(|&t| a + half * (1.0 + t)).collect(),
            weights: self.weights.iter().map(|&w| w * scale).collect(),
            exponents: self.exponents,
        }
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Eigen-decomposition of a symmetric tridiagonal matrix by implicit QL.
///
/// `diag` has length n, `off[i]` couples rows i and i+1 (length n-1).
/// Returns the eigenvalues and the squared first components of the
/// normalised eigenvectors, sorted by eigenvalue.
fn tridiagonal_eigen(diag: &[f64], off: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(&off[..n - 1]);
    let mut z = vec![0.0; n];
    z[0] = 1.0;

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 100 {
                return Err(DunklError::NoConvergence(n));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let fz = z[i + 1];
                z[i + 1] = s * z[i] + c * fz;
                z[i] = c * z[i] - s * fz;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    Ok((
        idx.iter().map(|&i| d[i]).collect(),
        idx.iter().map(|&i| z[i] * z[i]).collect(),
    ))
}

fn golub_welsch(diag: &[f64], off: &[f64], mu0: f64, exponents: (f64, f64)) -> Result<GaussRule> {
    let (nodes, v0sq) = tridiagonal_eigen(diag, off)?;
    Ok(GaussRule {
        nodes,
        weights: v0sq.into_iter().map(|v| v * mu0).collect(),
        exponents,
    })
}

/// Gauss–Jacobi rule for the weight `(1-t)^alpha (1+t)^beta` on `[-1, 1]`.
pub fn gauss_jacobi(alpha: f64, beta: f64, n: usize) -> Result<GaussRule> {
    if n == 0 {
        return domain("quadrature order must be at least 1");
    }
    if !(alpha > -1.0 && beta > -1.0) {
        return domain(format!(
            "Jacobi exponents must exceed -1, got ({alpha}, {beta})"
        ));
    }
    let ab = alpha + beta;
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    diag[0] = (beta - alpha) / (ab + 2.0);
    for (k, dk) in diag.iter_mut().enumerate().skip(1) {
        let kf = k as f64;
        *dk = (beta * beta - alpha * alpha) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0));
    }
    for (i, ok) in off.iter_mut().enumerate() {
        let k = (i + 1) as f64;
        let b2 = if i == 0 {
            4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab).powi(2) * (3.0 + ab))
        } else {
            let s = 2.0 * k + ab;
            4.0 * k * (k + alpha) * (k + beta) * (k + ab) / (s * s * (s + 1.0) * (s - 1.0))
        };
        *ok = b2.sqrt();
    }
    let mu0 = ((ab + 1.0) * std::f64::consts::LN_2 + ln_beta(alpha + 1.0, beta + 1.0)).exp();
    let mut rule = golub_welsch(&diag, &off, mu0, (alpha, beta))?;
    if alpha == beta {
        symmetrize(&mut rule);
    }
    Ok(rule)
}

/// Enforce exact reflection symmetry of a rule for an even weight.
fn symmetrize(rule: &mut GaussRule) {
    let n = rule.len();
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let t = 0.5 * (rule.nodes[j] - rule.nodes[i]);
        let w = 0.5 * (rule.weights[i] + rule.weights[j]);
        rule.nodes[i] = -t;
        rule.nodes[j] = t;
        rule.weights[i] = w;
        rule.weights[j] = w;
    }
    if n % 2 == 1 {
        rule.nodes[n / 2] = 0.0;
    }
}

pub fn gauss_legendre(n: usize) -> Result<GaussRule> {
    gauss_jacobi(0.0, 0.0, n)
}

/// Generalised Gauss–Laguerre rule for `u^alpha e^{-u}` on `[0, inf)`.
pub fn gauss_laguerre(alpha: f64, n: usize) -> Result<GaussRule> {
    if n == 0 {
        return domain("quadrature order must be at least 1");
    }
    if alpha <= -1.0 {
        return domain(format!("Laguerre exponent must exceed -1, got {alpha}"));
    }
    let diag: Vec<f64> = (0..n).map(|k| 2.0 * k as f64 + alpha + 1.0).collect();
    let off: Vec<f64> = (1..n)
        .map(|k| (k as f64 * (k as f64 + alpha)).sqrt())
        .collect();
    golub_welsch(&diag, &off, ln_gamma(alpha + 1.0).exp(), (alpha, 0.0))
}

/// Gauss rule for the translation weight `(1-t^2)^(k-1)` on `(-1, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiRule {
    pub order: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Exponent `k - 1` of the weight.
    pub exponent: f64,
    /// `B(k, 1/2)`, the total mass of the weight.
    pub beta_norm: f64,
}

/// Build the Gauss–Jacobi rule with `order` nodes for `(1-t^2)^(kappa-1)`.
///
/// `kappa = 0` has no rule: the normalised density collapses to a unit mass
/// at `t = 1`, so callers must dispatch to the classical branch.
pub fn jacobi_rule(kappa: f64, order: usize) -> Result<JacobiRule> {
    if kappa == 0.0 {
        return Err(DunklError::DegenerateWeight);
    }
    if !(kappa > 0.0) || !kappa.is_finite() {
        return domain(format!("multiplicity must be positive, got {kappa}"));
    }
    let g = gauss_jacobi(kappa - 1.0, kappa - 1.0, order)?;
    Ok(JacobiRule {
        order,
        nodes: g.nodes,
        weights: g.weights,
        exponent: kappa - 1.0,
        beta_norm: ln_beta(kappa, 0.5).exp(),
    })
}

impl JacobiRule {
    pub fn kappa(&self) -> f64 {
        self.exponent + 1.0
    }

    /// Iterate over `(t_i, w_i (1 + t_i) / B(k, 1/2))`: the rule for the
    /// probability density `psi_k`.
    pub fn psi_nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let inv = 1.0 / self.beta_norm;
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&t, &w)| (t, w * (1.0 + t) * inv))
    }
}

/// `int g(t) psi_k(t) dt` by the rule: `sum w_i (1+t_i) g(t_i) / B(k, 1/2)`.
pub fn integrate_psi(rule: &JacobiRule, mut g: impl FnMut(f64) -> f64) -> f64 {
    rule.psi_nodes().map(|(t, w)| w * g(t)).sum()
}

/// A point of a double-exponential rule on `[a, b]` with exact endpoint
/// distances.
#[derive(Debug, Clone, Copy)]
pub struct DePoint {
    pub x: f64,
    /// `x - a`
    pub from_lo: f64,
    /// `b - x`
    pub from_hi: f64,
}

/// Tanh-sinh rule on `[-1, 1]`, stored as `(1 + t, 1 - t, weight)` triples.
#[derive(Debug, Clone)]
pub struct TanhSinh {
    points: Vec<(f64, f64, f64)>,
}

impl TanhSinh {
    /// Rule with step `h`, truncated where the weights underflow.
    pub fn new(h: f64) -> Self {
        Self::with_limit(h, 7.0)
    }

    /// Rule with step `h` on `|tau| <= tau_max`.
    pub fn with_limit(h: f64, tau_max: f64) -> Self {
        use std::f64::consts::FRAC_PI_2;
        let mut points = Vec::new();
        let push = |tau: f64, points: &mut Vec<(f64, f64, f64)>| -> bool {
            let u = FRAC_PI_2 * tau.sinh();
            // 1 - tanh(u) and 1 + tanh(u) without cancellation
            let e = (-2.0 * u.abs()).exp();
            let small = 2.0 * e / (1.0 + e);
            let big = 2.0 - small;
            let (one_plus, one_minus) = if u >= 0.0 { (big, small) } else { (small, big) };
            let ch = (u.abs()).cosh();
            let w = h * FRAC_PI_2 * tau.cosh() / (ch * ch);
            if !(w > 1e-300) || small <= 0.0 {
                return false;
            }
            points.push((one_plus, one_minus, w));
            true
        };
        push(0.0, &mut points);
        let mut k = 1;
        loop {
            let tau = k as f64 * h;
            let a = push(tau, &mut points);
            let b = push(-tau, &mut points);
            if !(a && b) || tau + h > tau_max {
                break;
            }
            k += 1;
        }
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Map the rule onto `[a, b]`.
    pub fn points(&self, a: f64, b: f64) -> impl Iterator<Item = (DePoint, f64)> + '_ {
        let half = 0.5 * (b - a);
        self.points.iter().map(move |&(p, m, w)| {
            let from_lo = half * p;
            let from_hi = half * m;
            let x = if from_lo <= from_hi {
                a + from_lo
            } else {
                b - from_hi
            };
            (
                DePoint {
                    x,
                    from_lo,
                    from_hi,
                },
                w * half,
            )
        })
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(DePoint) -> f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let mut s = 0.0;
        for (p, w) in self.points(a, b) {
            let v = f(p);
            if v != 0.0 {
                s += w * v;
            }
        }
        s
    }
}

impl Default for TanhSinh {
    fn default() -> Self {
        Self::new(1.0 / 16.0)
    }
}

/// Exp-sinh rule for `[a, inf)`: `x = a + exp(pi/2 sinh tau)`.
#[derive(Debug, Clone)]
pub struct ExpSinh {
    points: Vec<(f64, f64)>,
}

impl ExpSinh {
    pub fn new(h: f64) -> Self {
        use std::f64::consts::FRAC_PI_2;
        let mut points = Vec::new();
        let mut k: i64 = -((7.0 / h) as i64);
        loop {
            let tau = k as f64 * h;
            let u = FRAC_PI_2 * tau.sinh();
            let off = u.exp();
            if off > 1e4 && tau > 0.0 {
                // integrands handled here decay at least like e^{-x}
                break;
            }
            let w = h * FRAC_PI_2 * tau.cosh() * off;
            if w > 1e-300 {
                points.push((off, w));
            }
            k += 1;
        }
        Self { points }
    }

    /// `int_a^inf f(x) dx`; `f` receives `(x, x - a)`.
    pub fn integrate(&self, a: f64, mut f: impl FnMut(f64, f64) -> f64) -> f64 {
        let mut s = 0.0;
        for &(off, w) in &self.points {
            let v = f(a + off, off);
            if v != 0.0 {
                s += w * v;
            }
        }
        s
    }
}

impl Default for ExpSinh {
    fn default() -> Self {
        Self::new(1.0 / 32.0)
    }
}

const GK15_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK15_WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const GK15_WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = GK15_WK[7] * fc;
    let mut g = GK15_WG[3] * fc;
    for i in 0..7 {
        let x = h * GK15_NODES[i];
        let s = f(c - x) + f(c + x);
        k += GK15_WK[i] * s;
        if i % 2 == 1 {
            g += GK15_WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss–Kronrod (7, 15) quadrature on `[a, b]`.
///
/// Intervals are bisected largest-error first until the summed error
/// estimate falls below `max(abs_tol, rel_tol * |I|)`.
pub fn adaptive_gk(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> f64 {
    if a == b {
        return 0.0;
    }
    let mut intervals = vec![{
        let (v, e) = gk15(&mut f, a, b);
        (a, b, v, e)
    }];
    for _ in 0..2000 {
        let total: f64 = intervals.iter().map(|iv| iv.2).sum();
        let err: f64 = intervals.iter().map(|iv| iv.3).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            break;
        }
        let (imax, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("nonempty");
        let (lo, hi, _, _) = intervals.swap_remove(imax);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
    }
    intervals.sort_by(|x, y| x.0.total_cmp(&y.0));
    intervals.iter().map(|iv| iv.2).sum()
}

/// Adaptive quadrature on `[a, inf)` through `x = a + (1 - v) / v`.
pub fn adaptive_gk_semi_infinite(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> f64 {
    adaptive_gk(
        |v| {
            if v <= 0.0 {
                return 0.0;
            }
            let x = a + (1.0 - v) / v;
            let y = f(x) / (v * v);
            if y.is_finite() {
                y
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        abs_tol,
        rel_tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::beta;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn legendre_low_order_exact() {
        let r = gauss_legendre(3).unwrap();
        let x = (0.6f64).sqrt();
        assert_relative_eq!(r.nodes[0], -x, epsilon = 1e-15);
        assert_relative_eq!(r.nodes[1], 0.0, epsilon = 1e-15);
        assert_relative_eq!(r.weights[0], 5.0 / 9.0, epsilon = 1e-15);
        assert_relative_eq!(r.weights[1], 8.0 / 9.0, epsilon = 1e-15);
    }

    #[test]
    fn jacobi_rule_weight_sums() {
        for n in [1, 5, 64, 200] {
            let r = jacobi_rule(1.0, n).unwrap();
            assert_relative_eq!(r.weights.iter().sum::<f64>(), 2.0, max_relative = 1e-12);
            let r = jacobi_rule(0.5, n).unwrap();
            assert_relative_eq!(r.weights.iter().sum::<f64>(), PI, max_relative = 1e-12);
            let r = jacobi_rule(0.3, n).unwrap();
            assert_relative_eq!(
                r.weights.iter().sum::<f64>(),
                beta(0.3, 0.5),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn jacobi_rule_odd_moment_vanishes() {
        for &k in &[0.3, 1.0, 2.5] {
            let r = jacobi_rule(k, 33).unwrap();
            let m1: f64 = r.nodes.iter().zip(&r.weights).map(|(t, w)| t * w).sum();
            assert!(m1.abs() < 1e-15, "{m1}");
        }
    }

    #[test]
    fn jacobi_rule_polynomial_exactness() {
        // int t^{2j} (1-t^2)^{k-1} dt = B(j + 1/2, k)
        let k = 0.7;
        let n = 6;
        let r = jacobi_rule(k, n).unwrap();
        for j in 0..n {
            let m: f64 = r
                .nodes
                .iter()
                .zip(&r.weights)
                .map(|(t, w)| w * t.powi(2 * j as i32))
                .sum();
            assert_relative_eq!(m, beta(j as f64 + 0.5, k), max_relative = 1e-12);
        }
    }

    #[test]
    fn degenerate_and_invalid_weights() {
        assert_eq!(jacobi_rule(0.0, 8), Err(DunklError::DegenerateWeight));
        assert!(matches!(jacobi_rule(-0.5, 8), Err(DunklError::Domain(_))));
        assert!(matches!(jacobi_rule(1.0, 0), Err(DunklError::Domain(_))));
    }

    #[test]
    fn integrate_psi_examples() {
        let r = jacobi_rule(1.0, 32).unwrap();
        assert_relative_eq!(integrate_psi(&r, |_| 1.0), 1.0, max_relative = 1e-14);
        assert_relative_eq!(integrate_psi(&r, |t| t), 1.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(
            integrate_psi(&r, f64::exp),
            1f64.cosh(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn laguerre_moments() {
        let r = gauss_laguerre(0.5, 40).unwrap();
        // int u^{0.5} e^{-u} u^2 du = Gamma(3.5)
        let m = r.integrate(|u| u * u);
        assert_relative_eq!(m, crate::special::gamma(3.5), max_relative = 1e-12);
    }

    #[test]
    fn tanh_sinh_endpoint_singularity() {
        let ts = TanhSinh::default();
        // int_0^1 x^{-0.7} dx = 1/0.3
        let v = ts.integrate(0.0, 1.0, |p| p.from_lo.powf(-0.7));
        assert_relative_eq!(v, 1.0 / 0.3, max_relative = 1e-12);
        // int_{-1}^{1} (1-x^2)^{-1/2} = pi
        let v = ts.integrate(-1.0, 1.0, |p| (p.from_lo * p.from_hi).powf(-0.5));
        assert_relative_eq!(v, PI, max_relative = 1e-12);
    }

    #[test]
    fn exp_sinh_gamma_integral() {
        let es = ExpSinh::default();
        let v = es.integrate(0.0, |x, _| x.powf(-0.5) * (-x).exp());
        assert_relative_eq!(v, PI.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn adaptive_gk_matches_closed_forms() {
        let v = adaptive_gk(|x| x.sin(), 0.0, PI, 1e-14, 1e-14);
        assert_relative_eq!(v, 2.0, max_relative = 1e-13);
        let v = adaptive_gk_semi_infinite(|x| (-x).exp(), 1.0, 1e-15, 1e-13);
        assert_relative_eq!(v, (-1f64).exp(), max_relative = 1e-11);
    }
}
