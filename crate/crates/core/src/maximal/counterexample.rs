//! Dyadic blocks `chi_{[2^{n-1}, 2^n)}`: their maximal functions stay above a
//! fixed level on `|x| <= 2^n`, so the `l^r` sum at a point grows without
//! bound in the number of blocks while the blocks themselves have `l^r`
//! norm at most one.

use serde::Serialize;

use crate::error::{domain, Result};
use crate::functions::Indicator;

use super::MaximalOperator;

/// `(1 - 2^{-(2k+1)}) / 2^{2k+2}`.
pub fn counterexample_lower_bound(kappa: f64) -> Result<f64> {
    if !(kappa >= 0.0) || !kappa.is_finite() {
        return domain(format!("multiplicity must be nonnegative, got {kappa}"));
    }
    Ok(
        (1.0 - (-(2.0 * kappa + 1.0) * std::f64::consts::LN_2).exp())
            * (-(2.0 * kappa + 2.0) * std::f64::consts::LN_2).exp(),
    )
}

/// `chi_{[2^{n-1}, 2^n)}`.
pub fn dyadic_block(n: i32) -> Indicator {
    Indicator {
        lo: 2f64.powi(n - 1),
        hi: 2f64.powi(n),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockValue {
    pub n: i32,
    pub x: f64,
    /// `M chi_n(x)`
    pub value: f64,
    /// Whether `|x| <= 2^n`.
    pub covered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartialSum {
    pub x: f64,
    pub n: i32,
    /// `S_N(x)^r = sum_{n <= N} (M chi_n(x))^r`
    pub s_r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleRecord {
    pub kappa: f64,
    pub r: f64,
    pub n_max: i32,
    pub bound: f64,
    pub blocks: Vec<BlockValue>,
    pub partial_sums: Vec<PartialSum>,
    /// Smallest `M chi_n(x) - bound` over covered pairs.
    pub min_margin: f64,
    pub bound_holds: bool,
    /// Least-squares slope of `S_N(0)^r` against `N`.
    pub slope_at_origin: f64,
    /// `bound^r`
    pub bound_r: f64,
    /// Mean of `(M chi_n(0))^r` over the blocks.
    pub member_r: f64,
}

/// Least-squares slope, intercept and `R^2` of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    (slope, my - slope * mx, r2)
}

/// Maximal functions of the blocks `n = 1..=n_max` at each of `xs`, the
/// lower-bound check on covered points and the partial sums `S_N(x)^r`.
pub fn counterexample_run(
    kappa: f64,
    n_max: i32,
    r: f64,
    xs: &[f64],
    ratio: f64,
) -> Result<CounterexampleRecord> {
    if n_max < 1 {
        return domain(format!("need at least one block, got N = {n_max}"));
    }
    if !(r > 1.0) || !r.is_finite() {
        return domain(format!("l^r exponent must lie in (1, inf), got {r}"));
    }
    let bound = counterexample_lower_bound(kappa)?;
    let op = MaximalOperator::new(kappa)?;
    let mut xs: Vec<f64> = xs.to_vec();
    if !xs.contains(&0.0) {
        xs.insert(0, 0.0);
    }
    let mut blocks = Vec::new();
    for n in 1..=n_max {
        let f = dyadic_block(n);
        for &x in &xs {
            let value = op.maximal(&f, x, ratio)?;
            blocks.push(BlockValue {
                n,
                x,
                value,
                covered: x.abs() <= 2f64.powi(n),
            });
        }
    }
    let min_margin = blocks
        .iter()
        .filter(|b| b.covered)
        .map(|b| b.value - bound)
        .fold(f64::INFINITY, f64::min);
    let mut partial_sums = Vec::new();
    for &x in &xs {
        let mut s = 0.0;
        for n in 1..=n_max {
            let v = blocks
                .iter()
                .find(|b| b.n == n && b.x == x)
                .expect("computed above")
                .value;
            s += v.powf(r);
            partial_sums.push(PartialSum { x, n, s_r: s });
        }
    }
    let at0: Vec<&PartialSum> = partial_sums.iter().filter(|p| p.x == 0.0).collect();
    let ns: Vec<f64> = at0.iter().map(|p| p.n as f64).collect();
    let ss: Vec<f64> = at0.iter().map(|p| p.s_r).collect();
    let slope_at_origin = if n_max >= 2 {
        linear_fit(&ns, &ss).0
    } else {
        ss[0]
    };
    let member_r = blocks
        .iter()
        .filter(|b| b.x == 0.0)
        .map(|b| b.value.powf(r))
        .sum::<f64>()
        / n_max as f64;
    Ok(CounterexampleRecord {
        kappa,
        r,
        n_max,
        bound,
        blocks,
        partial_sums,
        min_margin,
        bound_holds: min_margin >= -1e-6,
        slope_at_origin,
        bound_r: bound.powf(r),
        member_r,
    })
}
