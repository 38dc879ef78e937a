//! Fefferman–Stein operator: member-wise maximal functions measured in
//! `l^r` pointwise.

use crate::error::{domain, DunklError, Result};
use crate::functions::RealFunction;

use super::{riemann_norm, MaximalOperator, XGrid};

/// Finite sequence of functions with the `l^r` exponent used to combine them.
pub struct FunctionSequence {
    members: Vec<Box<dyn RealFunction>>,
    r: f64,
}

impl FunctionSequence {
    pub fn new(members: Vec<Box<dyn RealFunction>>, r: f64) -> Result<Self> {
        if members.is_empty() {
            return domain("a function sequence needs at least one member");
        }
        if !(r > 1.0) || !r.is_finite() {
            return domain(format!("l^r exponent must lie in (1, inf), got {r}"));
        }
        Ok(Self { members, r })
    }

    pub fn members(&self) -> &[Box<dyn RealFunction>] {
        &self.members
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// `sum_n |f_n(x)|^r`.
    pub fn lr_power_at(&self, x: f64) -> f64 {
        self.members
            .iter()
            .map(|f| f.eval(x).abs().powf(self.r))
            .sum()
    }

    pub fn lr_norm_at(&self, x: f64) -> f64 {
        self.lr_power_at(x).powf(1.0 / self.r)
    }

    /// All member breakpoints.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.members.iter().flat_map(|f| f.breakpoints()).collect()
    }

    /// Hull of the member supports, if every member has one.
    pub fn support(&self) -> Option<(f64, f64)> {
        self.members
            .iter()
            .try_fold((f64::INFINITY, f64::NEG_INFINITY), |acc, f| {
                let (a, b) = f.support()?;
                Some((acc.0.min(a), acc.1.max(b)))
            })
    }

    /// Member supports, failing on any unbounded member.
    pub fn supports(&self) -> Result<Vec<(f64, f64)>> {
        self.members
            .iter()
            .map(|f| {
                f.support()
                    .filter(|s| s.0.is_finite() && s.1.is_finite())
                    .ok_or_else(|| {
                        DunklError::Precondition("every member needs a bounded support".into())
                    })
            })
            .collect()
    }
}

/// `(sum_n (M f_n(x))^r)^{1/r}`.
pub fn fs_apply(op: &MaximalOperator, seq: &FunctionSequence, x: f64, ratio: f64) -> Result<f64> {
    let mut s = 0.0;
    for f in seq.members() {
        s += op.maximal(f.as_ref(), x, ratio)?.powf(seq.r());
    }
    Ok(s.powf(1.0 / seq.r()))
}

/// `M f_n` at every cell, one row per member.
pub fn member_profiles(
    op: &MaximalOperator,
    seq: &FunctionSequence,
    grid: &XGrid,
    ratio: f64,
) -> Result<Vec<Vec<f64>>> {
    seq.members()
        .iter()
        .map(|f| op.profile(f.as_ref(), grid, ratio, false))
        .collect()
}

/// `sum_n (M f_n)^r` at every cell.
pub fn fs_power_profile(profiles: &[Vec<f64>], r: f64) -> Vec<f64> {
    let n = profiles.first().map_or(0, Vec::len);
    (0..n)
        .map(|i| profiles.iter().map(|row| row[i].powf(r)).sum())
        .collect()
}

/// `|| ||M f||_{l^r} ||_p / || ||f||_{l^r} ||_p` for each `p`.
pub fn vector_strong_ratios(
    op: &MaximalOperator,
    seq: &FunctionSequence,
    ps: &[f64],
    grid: &XGrid,
    ratio: f64,
) -> Result<Vec<f64>> {
    if let Some(p) = ps.iter().find(|p| !(**p > 1.0)) {
        return domain(format!("strong-type exponent must exceed 1, got {p}"));
    }
    let rinv = 1.0 / seq.r();
    let mf: Vec<f64> = fs_power_profile(&member_profiles(op, seq, grid, ratio)?, seq.r())
        .iter()
        .map(|v| v.powf(rinv))
        .collect();
    let f: Vec<f64> = grid.points.iter().map(|&x| seq.lr_norm_at(x)).collect();
    ps.iter()
        .map(|&p| {
            let nf = riemann_norm(&f, grid, p);
            if nf == 0.0 {
                return domain("sequence has zero norm on the grid");
            }
            Ok(riemann_norm(&mf, grid, p) / nf)
        })
        .collect()
}
