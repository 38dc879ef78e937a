//! Generalized Gaussian, Dunkl heat kernel and heat semigroup, with the
//! checks of the diffusion-semigroup axioms, the ergodic maximal function
//! of time averages, and the constants relating ball averages to heat
//! averages.
//!
//! The heat kernel factors over coordinates. Per coordinate, with
//! `c = xy/2t`,
//! `Q(x, y, t) = c_k (2t)^{-k-1/2} e^{-(|x|-|y|)^2/4t} E_k(c) e^{-|c|}`,
//! so only the scaled kernel is ever evaluated.

use rayon::prelude::*;
use serde::Serialize;

use crate::context::DunklContext;
use crate::error::{domain, DunklError, Result};
use crate::functions::{Product, RealFunction};
use crate::kernel::{derivative_5pt, KernelEvaluator};
use crate::quadrature::{
    adaptive_gk, adaptive_gk_semi_infinite, gauss_jacobi, gauss_legendre, GaussRule,
};
use crate::special::ln_gamma;

/// Half-width of the heat peak in units of `sqrt(2t)`; `e^{-81/2}` beyond.
const PEAK_WIDTHS: f64 = 9.0;

pub const DEFAULT_T_MIN: f64 = 1e-3;
pub const DEFAULT_T_MAX: f64 = 1e3;
pub const DEFAULT_T_RATIO: f64 = 1.1;

/// `q_t(x) = c_k (2t)^{-d/2-gamma} e^{-|x|^2/4t}`.
pub fn gaussian_qt(ctx: &DunklContext, x: &[f64], t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return domain(format!("time must be positive, got {t}"));
    }
    if x.len() != ctx.d {
        return Err(DunklError::DimensionMismatch {
            expected: ctx.d,
            got: x.len(),
        });
    }
    let m = 0.5 * ctx.homogeneous_dim();
    let r2: f64 = x.iter().map(|v| v * v).sum();
    Ok(ctx.mehta_constant * (-m * (2.0 * t).ln() - r2 / (4.0 * t)).exp())
}

/// Nodes per Gauss panel.
const PANEL_ORDER: usize = 32;
/// Largest panel of the integrals taken over `H_t f`.
const OUTER_PANEL: f64 = 0.5;

/// Composite Gauss rule for `int g(y) |y|^{2k} dy`: Gauss–Jacobi on panels
/// ending at the origin, Gauss–Legendre elsewhere.
#[derive(Debug, Clone)]
struct PanelRule {
    kappa: f64,
    legendre: GaussRule,
    /// Weight `(1 + t)^{2k}` on `[-1, 1]`.
    jacobi: GaussRule,
}

impl PanelRule {
    fn new(kappa: f64) -> Result<Self> {
        Ok(Self {
            kappa,
            legendre: gauss_legendre(PANEL_ORDER)?,
            jacobi: gauss_jacobi(0.0, 2.0 * kappa, PANEL_ORDER)?,
        })
    }

    fn integrate(&self, lo: f64, hi: f64, cuts: &[f64], g: impl Fn(f64) -> f64) -> f64 {
        let mut pts = vec![lo, hi, 0.0];
        pts.extend_from_slice(cuts);
        pts.retain(|p| p.is_finite() && *p >= lo && *p <= hi);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let k2 = 2.0 * self.kappa;
        let mut total = 0.0;
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            if self.kappa > 0.0 && (a == 0.0 || b == 0.0) {
                // y = 0 + (len/2)(1 + t) on the side away from the origin
                let len = b - a;
                let sign = if a == 0.0 { 1.0 } else { -1.0 };
                let scale = (0.5 * len).powf(1.0 + k2);
                total += scale
                    * self
                        .jacobi
                        .nodes
                        .iter()
                        .zip(&self.jacobi.weights)
                        .map(|(&t, &wt)| wt * g(sign * 0.5 * len * (1.0 + t)))
                        .sum::<f64>();
            } else {
                let half = 0.5 * (b - a);
                let mid = 0.5 * (a + b);
                total += half
                    * self
                        .legendre
                        .nodes
                        .iter()
                        .zip(&self.legendre.weights)
                        .map(|(&t, &wt)| {
                            let y = mid + half * t;
                            let v = g(y);
                            if v == 0.0 {
                                0.0
                            } else if k2 == 0.0 {
                                wt * v
                            } else {
                                wt * v * y.abs().powf(k2)
                            }
                        })
                        .sum::<f64>();
            }
        }
        total
    }
}

/// Heat semigroup of a context.
#[derive(Debug, Clone)]
pub struct HeatConfig {
    ctx: DunklContext,
    kernels: KernelEvaluator,
    /// Per-coordinate `ln c_{k_j}`.
    ln_c: Vec<f64>,
    panels: Vec<PanelRule>,
}

impl HeatConfig {
    pub fn new(ctx: &DunklContext) -> Result<Self> {
        let kernels = KernelEvaluator::new(ctx)?;
        let ln_c = ctx
            .kappa()
            .iter()
            .map(|&k| -((k + 0.5) * std::f64::consts::LN_2 + ln_gamma(k + 0.5)))
            .collect();
        let panels = ctx
            .kappa()
            .iter()
            .map(|&k| PanelRule::new(k))
            .collect::<Result<_>>()?;
        Ok(Self {
            ctx: ctx.clone(),
            kernels,
            ln_c,
            panels,
        })
    }

    pub fn context(&self) -> &DunklContext {
        &self.ctx
    }

    fn coordinate_kernel(&self, j: usize, x: f64, y: f64, t: f64) -> f64 {
        let k = self.ctx.kappa()[j];
        let c = x * y / (2.0 * t);
        let gap = x.abs() - y.abs();
        let e = self.kernels.coordinate(j).scaled(c, c.abs());
        (self.ln_c[j] - (k + 0.5) * (2.0 * t).ln() - gap * gap / (4.0 * t)).exp() * e
    }

    /// `Q(x, y, t)`.
    pub fn heat_kernel(&self, x: &[f64], y: &[f64], t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return domain(format!("time must be positive, got {t}"));
        }
        for v in [x, y] {
            if v.len() != self.ctx.d {
                return Err(DunklError::DimensionMismatch {
                    expected: self.ctx.d,
                    got: v.len(),
                });
            }
        }
        Ok((0..self.ctx.d)
            .map(|j| self.coordinate_kernel(j, x[j], y[j], t))
            .product())
    }

    /// One-dimensional semigroup of coordinate `j` applied to `f` at `x`.
    pub fn apply_coordinate<F: RealFunction + ?Sized>(
        &self,
        j: usize,
        f: &F,
        t: f64,
        x: f64,
    ) -> f64 {
        if t == 0.0 {
            return f.eval(x);
        }
        let s = (2.0 * t).sqrt();
        let ax = x.abs();
        let reach = ax + PEAK_WIDTHS * s;
        let (mut lo, mut hi) = (-reach, reach);
        if let Some((a, b)) = f.support() {
            lo = lo.max(a);
            hi = hi.min(b);
        }
        if lo >= hi {
            return 0.0;
        }
        let near = (ax - PEAK_WIDTHS * s).max(0.0);
        let mut cuts = f.breakpoints();
        for p in [near, ax, ax - 3.0 * s, ax + 3.0 * s, ax - s, ax + s] {
            if p > 0.0 {
                cuts.push(p);
                cuts.push(-p);
            }
        }
        self.panels[j].integrate(lo, hi, &cuts, |y| {
            let v = f.eval(y);
            if v == 0.0 {
                0.0
            } else {
                v * self.coordinate_kernel(j, x, y, t)
            }
        })
    }

    /// `int g dmu_k` over `[lo, hi]` in panels no wider than `OUTER_PANEL`.
    fn outer_integral(
        &self,
        lo: f64,
        hi: f64,
        breaks: &[f64],
        g: impl Fn(f64) -> f64 + Sync,
    ) -> f64 {
        let n = ((hi - lo) / OUTER_PANEL).ceil().max(1.0) as usize;
        let mut cuts: Vec<f64> = (1..n)
            .map(|i| lo + (hi - lo) * i as f64 / n as f64)
            .collect();
        cuts.extend_from_slice(breaks);
        self.panels[0].integrate(lo, hi, &cuts, g)
    }

    fn check_one_dim(&self) -> Result<()> {
        if self.ctx.d != 1 {
            return domain(format!(
                "operation is one-dimensional, context has d = {}",
                self.ctx.d
            ));
        }
        Ok(())
    }

    /// `H_t f(x)` in one dimension; `H_0 f = f`.
    pub fn heat_apply<F: RealFunction + ?Sized>(&self, f: &F, t: f64, x: f64) -> Result<f64> {
        self.check_one_dim()?;
        if !(t >= 0.0) {
            return domain(format!("time must be nonnegative, got {t}"));
        }
        Ok(self.apply_coordinate(0, f, t, x))
    }

    /// `H_t f(x)` for a tensor product `f`.
    pub fn heat_apply_product(&self, f: &Product, t: f64, x: &[f64]) -> Result<f64> {
        if !(t >= 0.0) {
            return domain(format!("time must be nonnegative, got {t}"));
        }
        if x.len() != self.ctx.d || f.factors().len() != self.ctx.d {
            return Err(DunklError::DimensionMismatch {
                expected: self.ctx.d,
                got: x.len().min(f.factors().len()),
            });
        }
        Ok(f.factors()
            .iter()
            .enumerate()
            .map(|(j, fj)| self.apply_coordinate(j, fj.as_ref(), t, x[j]))
            .product())
    }

    /// `H_t f` as an evaluable function.
    pub fn evolved<'a, F: RealFunction + ?Sized>(&'a self, f: &'a F, t: f64) -> Evolved<'a, F> {
        Evolved { cfg: self, f, t }
    }

    /// `max_x |H_t(H_s f)(x) - H_{t+s} f(x)|` over `xs`.
    pub fn semigroup_defect<F: RealFunction + ?Sized>(
        &self,
        f: &F,
        t: f64,
        s: f64,
        xs: &[f64],
    ) -> Result<f64> {
        self.check_one_dim()?;
        if !(t >= 0.0 && s >= 0.0) {
            return domain(format!("times must be nonnegative, got ({t}, {s})"));
        }
        let inner = self.evolved(f, s);
        Ok(xs
            .par_iter()
            .map(|&x| {
                (self.apply_coordinate(0, &inner, t, x) - self.apply_coordinate(0, f, t + s, x))
                    .abs()
            })
            .reduce(|| 0.0, f64::max))
    }

    /// `|<H_t f, g> - <f, H_t g>| / (||f||_2 ||g||_2)`.
    pub fn symmetry_defect<F: RealFunction, G: RealFunction>(
        &self,
        f: &F,
        g: &G,
        t: f64,
    ) -> Result<f64> {
        self.check_one_dim()?;
        let (fa, fb) = bounded_support(f)?;
        let (ga, gb) = bounded_support(g)?;
        let hf = self.evolved(f, t);
        let hg = self.evolved(g, t);
        let pair = |u: &dyn RealFunction, v: &dyn RealFunction, a: f64, b: f64| {
            self.outer_integral(a, b, &v.breakpoints(), |x| {
                let vx = v.eval(x);
                if vx == 0.0 {
                    0.0
                } else {
                    u.eval(x) * vx
                }
            })
        };
        let (left, right) = rayon::join(|| pair(&hf, g, ga, gb), || pair(&hg, f, fa, fb));
        let nf = self
            .outer_integral(fa, fb, &f.breakpoints(), |x| f.eval(x).powi(2))
            .sqrt();
        let ng = self
            .outer_integral(ga, gb, &g.breakpoints(), |x| g.eval(x).powi(2))
            .sqrt();
        if nf == 0.0 || ng == 0.0 {
            return Ok((left - right).abs());
        }
        Ok((left - right).abs() / (nf * ng))
    }

    /// `||H_t f||_p / ||f||_p`; `p = inf` compares sup-norms on a grid.
    pub fn contraction_ratio<F: RealFunction + ?Sized>(
        &self,
        f: &F,
        t: f64,
        p: f64,
    ) -> Result<f64> {
        self.check_one_dim()?;
        if !(p >= 1.0) {
            return domain(format!("exponent must be at least 1, got {p}"));
        }
        let (a, b) = bounded_support(f)?;
        let hf = self.evolved(f, t);
        let (ha, hb) = hf.support().expect("bounded input");
        let mut cuts = f.breakpoints();
        cuts.extend(f.breakpoints().iter().map(|v| -v));
        if p.is_infinite() {
            let grid: Vec<f64> = (0..=800)
                .map(|i| ha + (hb - ha) * i as f64 / 800.0)
                .collect();
            let mut fgrid: Vec<f64> = (0..=800).map(|i| a + (b - a) * i as f64 / 800.0).collect();
            fgrid.extend(f.breakpoints());
            let sup_h = grid
                .par_iter()
                .map(|&x| hf.eval(x).abs())
                .reduce(|| 0.0, f64::max);
            let sup_f = fgrid.iter().map(|&x| f.eval(x).abs()).fold(0.0, f64::max);
            return Ok(sup_h / sup_f);
        }
        let nh = self.outer_integral(ha, hb, &cuts, |x| hf.eval(x).abs().powf(p));
        let nf = self.outer_integral(a, b, &f.breakpoints(), |x| f.eval(x).abs().powf(p));
        Ok((nh / nf).powf(1.0 / p))
    }

    /// `|d/dt H_t f(x) - Delta_k H_t f(x)|` with five-point stencils in both
    /// variables, `Delta_k u = u'' + 2k u'/x - k (u(x) - u(-x)) / x^2`.
    pub fn heat_equation_residual<F: RealFunction + ?Sized>(
        &self,
        f: &F,
        x: f64,
        t: f64,
    ) -> Result<f64> {
        self.check_one_dim()?;
        if x == 0.0 {
            return domain("the residual is evaluated away from the origin");
        }
        let ht = (0.25 * t).min(1e-3);
        if !(t > 2.0 * ht) || ht <= 0.0 {
            return domain(format!("time must be positive, got {t}"));
        }
        let hx = 1e-2;
        let k = self.ctx.kappa()[0];
        let u = |y: f64| self.apply_coordinate(0, f, t, y);
        let dt = derivative_5pt(|s| self.apply_coordinate(0, f, s, x), t, ht);
        let d1 = derivative_5pt(u, x, hx);
        let d2 = (-u(x - 2.0 * hx) + 16.0 * u(x - hx) - 30.0 * u(x) + 16.0 * u(x + hx)
            - u(x + 2.0 * hx))
            / (12.0 * hx * hx);
        let lap = d2 + 2.0 * k * d1 / x - k * (u(x) - u(-x)) / (x * x);
        Ok((dt - lap).abs())
    }

    /// `(t, t^{-1} int_0^t H_s f(x) ds)` for every point of `grid`.
    pub fn time_averages<F: RealFunction + ?Sized>(
        &self,
        f: &F,
        x: f64,
        grid: &TimeGrid,
    ) -> Result<Vec<(f64, f64)>> {
        self.check_one_dim()?;
        let ts = grid.points();
        let mut segments: Vec<(f64, f64, usize)> = Vec::new();
        // graded mesh below the first grid time
        let mut edge = ts[0] * 1e-6;
        segments.push((0.0, edge, 8));
        while edge < ts[0] * (1.0 - 1e-12) {
            let next = (edge * 10.0).min(ts[0]);
            segments.push((edge, next, 32));
            edge = next;
        }
        for w in ts.windows(2) {
            let decades = (w[1] / w[0]).log10();
            segments.push((w[0], w[1], ((32.0 * decades).ceil() as usize).max(4)));
        }
        let mut rules: Vec<(usize, GaussRule)> = Vec::new();
        let mut nodes: Vec<(f64, f64, usize)> = Vec::new();
        for (i, &(a, b, n)) in segments.iter().enumerate() {
            if !rules.iter().any(|r| r.0 == n) {
                rules.push((n, gauss_legendre(n)?));
            }
            let rule = &rules.iter().find(|r| r.0 == n).expect("inserted").1;
            let mapped = rule.mapped(a, b);
            nodes.extend(
                mapped
                    .nodes
                    .iter()
                    .zip(&mapped.weights)
                    .map(|(&s, &w)| (s, w, i)),
            );
        }
        let values: Vec<f64> = nodes
            .par_iter()
            .map(|&(s, w, _)| w * self.apply_coordinate(0, f, s, x))
            .collect();
        let mut per_segment = vec![0.0; segments.len()];
        for (v, n) in values.iter().zip(&nodes) {
            per_segment[n.2] += v;
        }
        let first = segments.len() - (ts.len() - 1);
        let mut acc: f64 = per_segment[..first].iter().sum();
        let mut out = vec![(ts[0], acc / ts[0])];
        for (i, &t) in ts.iter().enumerate().skip(1) {
            acc += per_segment[first + i - 1];
            out.push((t, acc / t));
        }
        Ok(out)
    }

    /// `sup_t |t^{-1} int_0^t H_s f(x) ds|` over the grid.
    pub fn hds_maximal<F: RealFunction + ?Sized>(
        &self,
        f: &F,
        x: f64,
        grid: &TimeGrid,
    ) -> Result<f64> {
        Ok(self
            .time_averages(f, x, grid)?
            .iter()
            .map(|p| p.1.abs())
            .fold(0.0, f64::max))
    }
}

fn bounded_support<F: RealFunction + ?Sized>(f: &F) -> Result<(f64, f64)> {
    f.support()
        .filter(|s| s.0.is_finite() && s.1.is_finite())
        .ok_or_else(|| {
            DunklError::Precondition("function needs a bounded (effective) support".into())
        })
}

/// `H_t f` as a function of `x`.
pub struct Evolved<'a, F: ?Sized> {
    cfg: &'a HeatConfig,
    f: &'a F,
    t: f64,
}

impl<F: RealFunction + ?Sized> RealFunction for Evolved<'_, F> {
    fn eval(&self, x: f64) -> f64 {
        self.cfg.apply_coordinate(0, self.f, self.t, x)
    }
    fn breakpoints(&self) -> Vec<f64> {
        if self.t == 0.0 {
            self.f.breakpoints()
        } else {
            Vec::new()
        }
    }
    fn support(&self) -> Option<(f64, f64)> {
        let (a, b) = self.f.support()?;
        if self.t == 0.0 {
            return Some((a, b));
        }
        // the kernel also reaches the mirror image of the support
        let r = a.abs().max(b.abs()) + PEAK_WIDTHS * (2.0 * self.t).sqrt();
        Some((-r, r))
    }
}

/// Geometric grid of times `t_min ratio^k`, closed at `t_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub ratio: f64,
}

impl TimeGrid {
    pub fn new(t_min: f64, t_max: f64, ratio: f64) -> Result<Self> {
        if !(t_min > 0.0 && t_max > t_min && t_max.is_finite()) {
            return domain(format!(
                "time grid needs 0 < t_min < t_max, got [{t_min}, {t_max}]"
            ));
        }
        if !(ratio > 1.0) {
            return domain(format!("time grid ratio must exceed 1, got {ratio}"));
        }
        Ok(Self {
            t_min,
            t_max,
            ratio,
        })
    }

    pub fn points(&self) -> Vec<f64> {
        let mut out = vec![self.t_min];
        let mut t = self.t_min;
        while t < self.t_max * (1.0 - 1e-12) {
            t = (t * self.ratio).min(self.t_max);
            out.push(t);
        }
        out
    }
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self {
            t_min: DEFAULT_T_MIN,
            t_max: DEFAULT_T_MAX,
            ratio: DEFAULT_T_RATIO,
        }
    }
}

/// `ln int_{u0}^{u1} u^{a} e^{-u} du`, integrated around the peak scale.
fn ln_gamma_window(a: f64, u0: f64, u1: Option<f64>) -> f64 {
    let peak = a.max(u0);
    let peak = u1.map_or(peak, |b| peak.min(b));
    let shift = a * peak.ln() - peak;
    let g = |u: f64| {
        if u <= 0.0 {
            0.0
        } else {
            (a * u.ln() - u - shift).exp()
        }
    };
    let v = match u1 {
        Some(b) => adaptive_gk(g, u0, b, 0.0, 1e-13),
        None => adaptive_gk_semi_infinite(g, u0, 0.0, 1e-13),
    };
    shift + v.ln()
}

/// Smallest `C` with `1/mu(B_1) <= (C/t0) int_0^{t0} q_t|_S dt`.
///
/// In `u = 1/4t` the time integral is `c_k 2^m / 4 int_{1/4t0}^inf
/// u^{m-2} e^{-u} du` with `m = d/2 + gamma`.
pub fn indicator_domination_ratio(ctx: &DunklContext, t0: f64) -> Result<f64> {
    if !(t0 > 0.0) || !t0.is_finite() {
        return domain(format!("t0 must be positive, got {t0}"));
    }
    let m = 0.5 * ctx.homogeneous_dim();
    let ln_time = ctx.mehta_constant.ln() + m * std::f64::consts::LN_2 - 4f64.ln()
        + ln_gamma_window(m - 2.0, 0.25 / t0, None);
    Ok((-ctx.unit_ball_measure.ln() - (ln_time - t0.ln())).exp())
}

/// Smallest `C` with `1/mu(B_1) <= C q_{t0}|_S`.
pub fn pointwise_domination_ratio(ctx: &DunklContext, t0: f64) -> Result<f64> {
    if !(t0 > 0.0) || !t0.is_finite() {
        return domain(format!("t0 must be positive, got {t0}"));
    }
    let m = 0.5 * ctx.homogeneous_dim();
    let ln_q = ctx.mehta_constant.ln() - m * (2.0 * t0).ln() - 0.25 / t0;
    Ok((-ctx.unit_ball_measure.ln() - ln_q).exp())
}

/// Outcome of the tail inequality for the time integral of `q_t|_S`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cf1Check {
    pub holds: bool,
    /// `int_{1/n}^inf q_t|_S dt`
    pub lhs: f64,
    /// `(c_k 2^m / 4) (n/4)^{m-1} e^{-n/4}`
    pub rhs: f64,
    /// `1 - lhs / rhs`
    pub margin: f64,
}

/// `int_{1/n}^inf q_t|_S dt <= (c_k 2^m / 4) (n/4)^{m-1} e^{-n/4}` for
/// `n = d + 2 gamma >= 8`.
pub fn cf1_inequality_check(ctx: &DunklContext) -> Result<Cf1Check> {
    let n = ctx.homogeneous_dim();
    if n < 8.0 {
        return Err(DunklError::Precondition(format!(
            "needs d + 2 gamma >= 8, got {n}"
        )));
    }
    let m = 0.5 * n;
    let scale = ctx.mehta_constant.ln() + m * std::f64::consts::LN_2 - 4f64.ln();
    let ln_lhs = scale + ln_gamma_window(m - 2.0, 0.0, Some(0.25 * n));
    let ln_rhs = scale + (m - 1.0) * (0.25 * n).ln() - 0.25 * n;
    let margin = 1.0 - (ln_lhs - ln_rhs).exp();
    Ok(Cf1Check {
        holds: margin > 0.0,
        lhs: ln_lhs.exp(),
        rhs: ln_rhs.exp(),
        margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::{
        heat_gaussian_product, Constant, Gaussian, GaussianPoly, Indicator, SmoothedIndicator,
    };
    use crate::quadrature::TanhSinh;
    use crate::special::gamma;
    use crate::MultiplicityVector;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use statrs::function::gamma::gamma_ui;

    fn cfg(k: f64) -> HeatConfig {
        HeatConfig::new(&DunklContext::one_dim(k).unwrap()).unwrap()
    }

    #[test]
    fn qt_has_unit_mass() {
        for &k in &[0.0, 0.5, 1.3] {
            let ctx = DunklContext::one_dim(k).unwrap();
            for &t in &[0.1f64, 1.0, 10.0] {
                let r = 30.0 * t.sqrt();
                let mass = crate::translation::weighted_line_integral(k, -r, r, &[], |x| {
                    gaussian_qt(&ctx, &[x], t).unwrap()
                });
                assert!((mass - 1.0).abs() < 1e-9, "k={k} t={t} {mass}");
            }
        }
        let ctx = DunklContext::new(2, MultiplicityVector::new(vec![0.5, 2.0]).unwrap()).unwrap();
        let de = TanhSinh::default();
        let t = 0.7;
        let mass = 4.0
            * de.integrate(0.0, 12.0, |a| {
                de.integrate(0.0, 12.0, |b| {
                    ctx.weight(&[a.x, b.x]) * gaussian_qt(&ctx, &[a.x, b.x], t).unwrap()
                })
            });
        assert!((mass - 1.0).abs() < 1e-9, "{mass}");
        assert!(gaussian_qt(&ctx, &[0.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn qt_classical_normal() {
        let ctx = DunklContext::one_dim(0.0).unwrap();
        let v = gaussian_qt(&ctx, &[0.8], 0.5).unwrap();
        assert_relative_eq!(
            v,
            (-0.32f64).exp() / (2.0 * std::f64::consts::PI).sqrt(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn heat_kernel_cases() {
        let h = cfg(1.2);
        let ctx = h.context().clone();
        for &(x, y, t) in &[(0.3, -1.1, 0.2), (2.0, 1.5, 0.05), (-3.0, -2.5, 1.7)] {
            let a = h.heat_kernel(&[x], &[y], t).unwrap();
            let b = h.heat_kernel(&[y], &[x], t).unwrap();
            assert!(a > 0.0 && (a - b).abs() < 1e-12 * a.max(1.0));
            // unscaled product of independent kernel evaluations
            let ev = KernelEvaluator::new(&ctx).unwrap();
            let direct = gaussian_qt(&ctx, &[0.0], t).unwrap()
                * (-(x * x + y * y) / (4.0 * t)).exp()
                * ev.dunkl_kernel_1d(x / (2.0 * t).sqrt(), y / (2.0 * t).sqrt());
            assert_relative_eq!(a, direct, max_relative = 1e-11);
        }
        assert_relative_eq!(
            h.heat_kernel(&[0.0], &[0.9], 0.4).unwrap(),
            gaussian_qt(&ctx, &[0.9], 0.4).unwrap(),
            max_relative = 1e-14
        );
        let h0 = cfg(0.0);
        let (x, y, t) = (0.4, -1.3, 0.6);
        let classical =
            (4.0 * std::f64::consts::PI * t).powf(-0.5) * (-(x - y) * (x - y) / (4.0 * t)).exp();
        assert_relative_eq!(
            h0.heat_kernel(&[x], &[y], t).unwrap(),
            classical,
            max_relative = 1e-14
        );
        assert!(h0.heat_kernel(&[x], &[y], 0.0).is_err());
    }

    #[test]
    fn heat_fixes_constants_and_identity_at_zero() {
        for &k in &[0.0, 0.4, 2.5] {
            let h = cfg(k);
            for &x in &[0.0, 0.7, -2.0, 15.0] {
                for &t in &[1e-3, 0.1, 1.0, 30.0] {
                    let v = h.heat_apply(&Constant(1.0), t, x).unwrap();
                    assert!((v - 1.0).abs() < 1e-8, "k={k} x={x} t={t} {v}");
                }
            }
            let f = Indicator::new(-0.5, 1.0).unwrap();
            assert_eq!(h.heat_apply(&f, 0.0, 0.3).unwrap(), 1.0);
        }
    }

    #[test]
    fn classical_gaussian_evolution() {
        let h = cfg(0.0);
        let a = 0.8;
        let f = Gaussian::new(1.0, a);
        for &(x, t) in &[(0.0, 0.3), (1.2, 1.0), (-2.0, 0.05)] {
            let exact =
                (1.0f64 + 4.0 * a * t).powf(-0.5) * (-a * x * x / (1.0 + 4.0 * a * t)).exp();
            assert!((h.heat_apply(&f, t, x).unwrap() - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn heat_of_qt_is_qt() {
        for &k in &[0.5, 1.7] {
            let h = cfg(k);
            let ctx = h.context().clone();
            let q = Gaussian::heat(&ctx, 0.4).unwrap();
            for &x in &[0.0, 0.6, -1.4, 3.0] {
                let v = h.heat_apply(&q, 0.35, x).unwrap();
                let exact = gaussian_qt(&ctx, &[x], 0.75).unwrap();
                assert!((v - exact).abs() < 1e-10, "{v} {exact}");
            }
        }
    }

    #[test]
    fn product_heat_matches_product_gaussian() {
        let ctx = DunklContext::new(2, MultiplicityVector::new(vec![0.5, 1.0]).unwrap()).unwrap();
        let h = HeatConfig::new(&ctx).unwrap();
        let q = heat_gaussian_product(&ctx, 0.5).unwrap();
        let x = [0.4, -0.9];
        let v = h.heat_apply_product(&q, 0.25, &x).unwrap();
        assert_relative_eq!(
            v,
            gaussian_qt(&ctx, &x, 0.75).unwrap(),
            max_relative = 1e-10
        );
        assert!(h.heat_apply(&Constant(1.0), 1.0, 0.0).is_err());
    }

    #[test]
    fn semigroup_property() {
        let xs = [-1.5, -0.2, 0.0, 0.5, 1.1, 2.4];
        for &k in &[0.0, 0.8] {
            let h = cfg(k);
            let q = Gaussian::heat(h.context(), 1.0).unwrap();
            let f = SmoothedIndicator {
                half_width: 1.0,
                smoothing: 0.2,
            };
            for &t in &[0.1, 0.25, 0.5] {
                for &s in &[0.1, 0.25, 0.5] {
                    assert!(h.semigroup_defect(&q, t, s, &xs).unwrap() < 1e-9);
                    assert!(h.semigroup_defect(&f, t, s, &xs).unwrap() < 1e-9);
                }
            }
            assert_eq!(
                h.semigroup_defect(&Indicator::new(0.0, 1.0).unwrap(), 0.3, 0.0, &xs)
                    .unwrap(),
                0.0
            );
        }
    }

    #[test]
    fn self_adjoint() {
        for &k in &[0.0, 1.0] {
            let h = cfg(k);
            let q = Gaussian::heat(h.context(), 0.5).unwrap();
            let p = GaussianPoly {
                coeffs: vec![0.5, 1.0, -0.3],
                rate: 0.7,
            };
            let s = SmoothedIndicator {
                half_width: 0.8,
                smoothing: 0.1,
            };
            assert!(h.symmetry_defect(&q, &p, 0.3).unwrap() < 1e-7);
            assert!(h.symmetry_defect(&p, &s, 0.3).unwrap() < 1e-7);
            assert!(h.symmetry_defect(&s, &q, 0.3).unwrap() < 1e-7);
            assert_eq!(h.symmetry_defect(&p, &p, 0.3).unwrap(), 0.0);
        }
    }

    #[test]
    fn contraction_and_positivity() {
        let h = cfg(0.6);
        let fams: Vec<Box<dyn RealFunction>> = vec![
            Box::new(Indicator::new(0.5, 2.0).unwrap()),
            Box::new(Gaussian::new(2.0, 1.0)),
            Box::new(SmoothedIndicator {
                half_width: 1.0,
                smoothing: 0.2,
            }),
        ];
        for f in &fams {
            for &p in &[1.0, 2.0, f64::INFINITY] {
                let r = h.contraction_ratio(f.as_ref(), 0.3, p).unwrap();
                assert!(r <= 1.0 + 1e-8, "p={p} r={r}");
            }
            for &x in &[-3.0, -0.5, 0.0, 0.7, 4.0] {
                assert!(h.heat_apply(f.as_ref(), 0.2, x).unwrap() >= -1e-10);
            }
        }
        // L1 mass is conserved for nonnegative data
        let r1 = h
            .contraction_ratio(&Gaussian::new(1.0, 1.0), 0.5, 1.0)
            .unwrap();
        assert!((r1 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn solves_heat_equation() {
        for &k in &[0.0, 0.5, 1.5] {
            let h = cfg(k);
            let f = Indicator::new(-0.3, 1.0).unwrap();
            for &(x, t) in &[(0.5, 0.2), (-0.8, 0.5), (1.7, 1.0)] {
                let r = h.heat_equation_residual(&f, x, t).unwrap();
                assert!(r < 1e-4, "k={k} x={x} t={t} r={r}");
            }
        }
    }

    #[test]
    fn time_average_maximal() {
        let h = cfg(0.0);
        let grid = TimeGrid::default();
        assert!((h.hds_maximal(&Constant(1.0), 0.4, &grid).unwrap() - 1.0).abs() < 1e-9);
        let f = Indicator::new(-1.0, 1.0).unwrap();
        let m = h.hds_maximal(&f, 0.0, &grid).unwrap();
        assert!((m - 1.0).abs() < 1e-3, "{m}");
        // t^{-1} int_0^t erf(1/(2 sqrt s)) ds at t = 1 by direct quadrature
        let avg = h.time_averages(&f, 0.0, &grid).unwrap();
        let at1 = avg
            .iter()
            .min_by(|a, b| (a.0 - 1.0).abs().total_cmp(&(b.0 - 1.0).abs()))
            .unwrap();
        let oracle = adaptive_gk(
            |s| statrs::function::erf::erf(0.5 / s.sqrt()),
            0.0,
            at1.0,
            1e-14,
            1e-14,
        ) / at1.0;
        assert!((at1.1 - oracle).abs() < 1e-9, "{} {oracle}", at1.1);
        let fine = TimeGrid::new(1e-3, 1e3, 1.1f64.sqrt()).unwrap();
        let g = Gaussian::new(1.0, 4.0);
        assert!(
            h.hds_maximal(&g, 1.5, &fine).unwrap()
                >= h.hds_maximal(&g, 1.5, &grid).unwrap() - 1e-12
        );
        assert!(TimeGrid::new(1.0, 0.5, 1.1).is_err());
    }

    #[test]
    fn pointwise_ratio_matches_sphere_value() {
        for &(d, k) in &[(1usize, 0.0), (2, 0.5), (3, 1.5)] {
            let ctx = DunklContext::new(d, MultiplicityVector::uniform(d, k).unwrap()).unwrap();
            for &t0 in &[0.05, 0.5, 2.0] {
                let c = pointwise_domination_ratio(&ctx, t0).unwrap();
                let mut y = vec![0.0; d];
                y[0] = 1.0;
                let q = gaussian_qt(&ctx, &y, t0).unwrap();
                assert_relative_eq!(c * q * ctx.unit_ball_measure, 1.0, max_relative = 1e-12);
            }
        }
        assert!(pointwise_domination_ratio(&DunklContext::one_dim(1.0).unwrap(), 0.0).is_err());
    }

    #[test]
    fn domination_ratio_closed_form() {
        // u = 1/4t turns the time integral into an upper incomplete gamma
        for &(d, k) in &[(1usize, 1.5), (2, 0.5), (3, 0.5)] {
            let ctx = DunklContext::new(d, MultiplicityVector::uniform(d, k).unwrap()).unwrap();
            let m = 0.5 * ctx.homogeneous_dim();
            for &t0 in &[0.1, 1.0] {
                let time = ctx.mehta_constant * 2f64.powf(m) / 4.0 * gamma_ui(m - 1.0, 0.25 / t0);
                let exact = (1.0 / ctx.unit_ball_measure) / (time / t0);
                assert_relative_eq!(
                    indicator_domination_ratio(&ctx, t0).unwrap(),
                    exact,
                    max_relative = 1e-9
                );
            }
        }
        let ctx = DunklContext::one_dim(0.0).unwrap();
        let direct = adaptive_gk(
            |t| {
                if t > 0.0 {
                    ctx.sphere_heat_value(t)
                } else {
                    0.0
                }
            },
            0.0,
            1.0,
            0.0,
            1e-13,
        );
        assert_relative_eq!(
            indicator_domination_ratio(&ctx, 1.0).unwrap(),
            0.5 / direct,
            max_relative = 1e-9
        );
        assert!(indicator_domination_ratio(&ctx, 0.0).is_err());
    }

    #[test]
    fn cf1_cases() {
        let c8 = cf1_inequality_check(
            &DunklContext::new(8, MultiplicityVector::uniform(8, 0.0).unwrap()).unwrap(),
        )
        .unwrap();
        assert!(c8.holds && c8.margin > 0.0);
        let ctx = DunklContext::new(2, MultiplicityVector::new(vec![3.0, 0.0]).unwrap()).unwrap();
        let c = cf1_inequality_check(&ctx).unwrap();
        assert!(c.holds);
        // lower incomplete gamma oracle
        let m = 4.0;
        let lower = gamma(m - 1.0) - gamma_ui(m - 1.0, 2.0);
        assert_relative_eq!(
            c.lhs,
            ctx.mehta_constant * 2f64.powf(m) / 4.0 * lower,
            max_relative = 1e-10
        );
        assert!(matches!(
            cf1_inequality_check(&DunklContext::one_dim(0.0).unwrap()),
            Err(DunklError::Precondition(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn heat_preserves_mass_and_sign(k in 0.0f64..3.0, x in -4.0f64..4.0, t in 0.01f64..5.0) {
            let h = cfg(k);
            let one = h.heat_apply(&Constant(1.0), t, x).unwrap();
            prop_assert!((one - 1.0).abs() < 1e-8);
            let v = h.heat_apply(&Indicator::new(0.2, 0.9).unwrap(), t, x).unwrap();
            prop_assert!((-1e-10..=1.0 + 1e-8).contains(&v));
        }
    }
}
