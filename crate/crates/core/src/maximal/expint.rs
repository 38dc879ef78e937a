//! Layer-cake identity and exponential integrability of the Fefferman–Stein
//! operator on compact sets.

use serde::Serialize;

use crate::error::{domain, Result};
use crate::quadrature::gauss_legendre;

use super::counterexample::linear_fit;
use super::vector::{fs_power_profile, member_profiles, FunctionSequence};
use super::{MaximalOperator, XGrid};

const FIT_LEVELS: usize = 64;

/// Relative gap between `int phi(|g|) dmu` and
/// `int_0^inf phi'(l) mu(|g| > l) dl` for the cell function `g`.
///
/// The distribution function is a step function in `l`, so the right side
/// is a sum over the gaps between sorted values, each integrated with a
/// Gauss rule in `phi'` alone.
pub fn layer_cake_defect(
    phi: impl Fn(f64) -> f64,
    dphi: impl Fn(f64) -> f64,
    values: &[f64],
    masses: &[f64],
) -> f64 {
    let lhs: f64 = values
        .iter()
        .zip(masses)
        .map(|(v, m)| m * phi(v.abs()))
        .sum();
    let mut pairs: Vec<(f64, f64)> = values
        .iter()
        .map(|v| v.abs())
        .zip(masses.iter().copied())
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let rule = gauss_legendre(16).expect("fixed order");
    let mut rhs = 0.0;
    let mut level_mass = 0.0;
    for (i, &(v, m)) in pairs.iter().enumerate() {
        level_mass += m;
        let below = pairs.get(i + 1).map_or(0.0, |p| p.0);
        if v > below {
            rhs += level_mass * rule.mapped(below, v).integrate(&dphi);
        }
    }
    let scale = lhs.abs().max(rhs.abs());
    if scale == 0.0 {
        0.0
    } else {
        (lhs - rhs).abs() / scale
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonCheck {
    pub eps: f64,
    /// `int_K e^{eps ||Mf||^r} dmu`
    pub integral: f64,
    /// `mu(K) + eps A' / (beta - eps)`
    pub bound: f64,
    pub holds: bool,
    /// Relative layer-cake gap for `phi(t) = e^{eps t} - 1`.
    pub layer_cake_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpIntegrabilityRecord {
    pub kappa: f64,
    pub r: f64,
    pub members: usize,
    /// `K = [-a, a]`
    pub a: f64,
    pub cells: usize,
    /// `mu(K)` in closed form.
    pub mu_k: f64,
    /// `mu(K)` as the sum of cell masses.
    pub mu_k_cells: f64,
    /// `mu(supp ||f||_{l^r}^r)`
    pub support_mass: f64,
    /// Fitted tail rate in `mu(||Mf||^r > l) ~ A e^{-beta l}`.
    pub beta: f64,
    pub fit_prefactor: f64,
    pub r_squared: f64,
    pub fit_points: usize,
    /// Smallest `A'` with `mu(||Mf||^r > l) <= A' e^{-beta l}` for all `l`.
    pub tail_constant: f64,
    /// `A' / max(2 mu(K), mu(supp))`.
    pub measured_prefactor: f64,
    /// `log 2 / (2 beta sup ||f||_{l^r}^r)`.
    pub c_fit: f64,
    pub sup_input: f64,
    pub checks: Vec<EpsilonCheck>,
}

fn union_mass(kappa: f64, mut intervals: Vec<(f64, f64)>) -> f64 {
    let n = 2.0 * kappa + 1.0;
    let prim = |x: f64| x.signum() * x.abs().powf(n) / n;
    intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut total = 0.0;
    let mut cur: Option<(f64, f64)> = None;
    for (a, b) in intervals {
        cur = match cur {
            Some((c, d)) if a <= d => Some((c, d.max(b))),
            Some((c, d)) => {
                total += prim(d) - prim(c);
                Some((a, b))
            }
            None => Some((a, b)),
        };
    }
    if let Some((c, d)) = cur {
        total += prim(d) - prim(c);
    }
    total
}

/// Cells on `[-a, a]`: `cells` geometric cells per side from `a` down to an
/// eighth of the smallest nonzero breakpoint, one cell around the origin,
/// with the breakpoints as extra edges.
fn tail_grid(kappa: f64, a: f64, breaks: &[f64], cells: usize) -> Result<XGrid> {
    if cells < 2 {
        return domain("the tail grid needs at least two cells per side");
    }
    let small = breaks
        .iter()
        .map(|b| b.abs())
        .filter(|&b| b > 0.0 && b < a)
        .fold(a, f64::min)
        / 8.0;
    let q = (a / small).powf(1.0 / cells as f64);
    let mut edges = vec![0.0];
    for i in 0..=cells {
        let e = a / q.powi(i as i32);
        edges.extend([e, -e]);
    }
    edges.extend(breaks.iter().copied().filter(|b| b.abs() < a));
    XGrid::from_edges(kappa, edges)
}

/// Tail fit and exponential-integrability bound for `||M f||_{l^r}^r` on
/// `K = [-a, a]`, sampled on a grid that is geometric towards the origin. Without `eps`, the checks run at `{0, 0.2, 0.4, 0.6, 0.8} beta`.
pub fn exp_integrability_run(
    op: &MaximalOperator,
    seq: &FunctionSequence,
    a: f64,
    cells: usize,
    eps: Option<&[f64]>,
    ratio: f64,
) -> Result<ExpIntegrabilityRecord> {
    if !(a > 0.0) || !a.is_finite() {
        return domain(format!("compact set radius must be positive, got {a}"));
    }
    let kappa = op.kappa();
    let supports = seq.supports()?;
    let grid = tail_grid(kappa, a, &seq.breakpoints(), cells)?;
    let g = fs_power_profile(&member_profiles(op, seq, &grid, ratio)?, seq.r());
    let n = 2.0 * kappa + 1.0;
    let mu_k = 2.0 * a.powf(n) / n;
    let mu_k_cells = grid.total_mass();
    let support_mass = union_mass(kappa, supports);

    // distribution function at the sorted cell values
    let mut pairs: Vec<(f64, f64)> = g.iter().copied().zip(grid.masses.iter().copied()).collect();
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
    let mut levels: Vec<(f64, f64)> = Vec::new();
    let mut acc = 0.0;
    for (i, &(v, m)) in pairs.iter().enumerate() {
        acc += m;
        if pairs.get(i + 1).is_none_or(|p| p.0 < v) {
            levels.push((v, acc));
        }
    }
    // regress log mu(g > l) on a uniform l grid spanning the levels whose set
    // is smaller than half of K but larger than the ball inside the innermost
    // breakpoint, where g flattens out
    let inner = seq
        .breakpoints()
        .iter()
        .map(|b| b.abs())
        .filter(|&b| b > 0.0)
        .fold(a, f64::min);
    let floor = 2.0 * inner.min(a).powf(n) / n;
    let window: Vec<f64> = levels
        .iter()
        .filter(|(_, s)| *s <= 0.5 * mu_k_cells && *s >= floor)
        .map(|l| l.0)
        .collect();
    if window.len() < 3 {
        return domain("too few distinct levels to fit a tail; refine the grid");
    }
    let (l_lo, l_hi) = (window[window.len() - 1], window[0]);
    let fit: Vec<(f64, f64)> = (0..FIT_LEVELS)
        .map(|i| {
            let l = l_lo + (l_hi - l_lo) * i as f64 / (FIT_LEVELS - 1) as f64;
            // levels are sorted by decreasing value; mass of {g > l}
            let m = levels
                .iter()
                .take_while(|(v, _)| *v > l)
                .last()
                .map_or(0.0, |p| p.1);
            (l, m)
        })
        .filter(|p| p.1 > 0.0)
        .map(|(l, m)| (l, m.ln()))
        .collect();
    let (lx, ly): (Vec<f64>, Vec<f64>) = fit.iter().copied().unzip();
    let (slope, intercept, r_squared) = linear_fit(&lx, &ly);
    let beta = -slope;
    // just below v the level set has mass s, so sup_l m(l) e^{beta l} = max s e^{beta v}
    let tail_constant = levels
        .iter()
        .map(|&(v, s)| s * (beta * v).exp())
        .fold(0.0, f64::max);
    let measured_prefactor = tail_constant / (2.0 * mu_k).max(support_mass);
    let sup_input = grid
        .points
        .iter()
        .map(|&x| seq.lr_power_at(x))
        .fold(0.0, f64::max);
    let c_fit = std::f64::consts::LN_2 / (2.0 * beta * sup_input);

    let default_eps: Vec<f64> = [0.0, 0.2, 0.4, 0.6, 0.8].iter().map(|f| f * beta).collect();
    let eps: Vec<f64> = eps.map_or(default_eps, <[f64]>::to_vec);
    let checks = eps
        .iter()
        .map(|&e| {
            let integral: f64 = g
                .iter()
                .zip(&grid.masses)
                .map(|(v, m)| m * (e * v).exp())
                .sum();
            let bound = if e == 0.0 {
                mu_k_cells
            } else if e < beta {
                mu_k_cells + e * tail_constant / (beta - e)
            } else {
                f64::INFINITY
            };
            let defect = layer_cake_defect(
                |t| (e * t).exp_m1(),
                |t| e * (e * t).exp(),
                &g,
                &grid.masses,
            );
            EpsilonCheck {
                eps: e,
                integral,
                bound,
                holds: integral <= bound * (1.0 + 1e-12),
                layer_cake_defect: defect,
            }
        })
        .collect();
    Ok(ExpIntegrabilityRecord {
        kappa,
        r: seq.r(),
        members: seq.len(),
        a,
        cells: grid.len(),
        mu_k,
        mu_k_cells,
        support_mass,
        beta,
        fit_prefactor: intercept.exp(),
        r_squared,
        fit_points: fit.len(),
        tail_constant,
        measured_prefactor,
        c_fit,
        sup_input,
        checks,
    })
}
