//! Dense-quadrature Dunkl transform
//! `F f(x) = c_k int E_k(-ix, y) f(y) dmu_k(y)` and its inverse.
//!
//! The source grid is the Gauss–Jacobi rule of the weight `|y|^{2k}` on
//! `[0, R]`, mirrored to `[-R, 0]`. Writing `E(ic) = C(c) + i S(c)` with `C`
//! even and `S` odd, the sum over mirrored pairs only needs the even and odd
//! parts of the input:
//! `F f(x) = 2c sum_p W_p (C(x y_p) f_e(y_p) - i S(x y_p) f_o(y_p))`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::context::DunklContext;
use crate::error::{domain, DunklError, Result};
use crate::functions::RealFunction;
use crate::kernel::{CoordinateKernel, DEFAULT_ORDER};
use crate::quadrature::gauss_jacobi;
use crate::sampled::{ComplexSampled, SampledFunction};
use crate::translation::Translator;

pub const DEFAULT_NODES: usize = 2048;
pub const DEFAULT_GRID_MAX: f64 = 12.0;
/// Weighted tail mass allowed beyond the truncation radius.
const TAIL_TOLERANCE: f64 = 1e-12;

/// Truncation radius for an envelope `e^{-rate y^2}` against `|y|^{2k}`:
/// the smallest `R >= floor` with `R^{2k} e^{-rate R^2} < TAIL_TOLERANCE`.
pub fn envelope_radius(kappa: f64, rate: f64, floor: f64) -> f64 {
    let mut r = floor.max(1.0);
    while 2.0 * kappa * r.ln() - rate * r * r > TAIL_TOLERANCE.ln() {
        r *= 1.05;
    }
    r
}

/// One-dimensional transform plan.
#[derive(Debug, Clone)]
pub struct TransformPlan {
    ctx: DunklContext,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// Positive half of the nodes with their weights.
    half: Vec<(f64, f64)>,
    target: Vec<f64>,
    /// Row `i` holds `(C, S)(|x_i| y_p)` for every positive node `y_p`.
    rows: Vec<Vec<(f64, f64)>>,
    /// Row index and sign for each target point.
    row_of: Vec<(usize, f64)>,
    kernel: CoordinateKernel,
    level: usize,
}

impl TransformPlan {
    /// Plan with `n` source nodes (even) on `[-grid_max, grid_max]`; the
    /// target grid is the source grid.
    pub fn new(ctx: &DunklContext, n: usize, grid_max: f64) -> Result<Self> {
        Self::with_target(ctx, n, grid_max, None)
    }

    pub fn with_target(
        ctx: &DunklContext,
        n: usize,
        grid_max: f64,
        target: Option<Vec<f64>>,
    ) -> Result<Self> {
        if ctx.d != 1 {
            return domain(
                "a transform plan is one-dimensional; use TensorTransformPlan for d > 1",
            );
        }
        if n < 2 || !n.is_multiple_of(2) {
            return domain(format!("node count must be even and at least 2, got {n}"));
        }
        if !(grid_max > 0.0) || !grid_max.is_finite() {
            return domain(format!("grid radius must be positive, got {grid_max}"));
        }
        let k = ctx.kappa()[0];
        let rule = gauss_jacobi(0.0, 2.0 * k, n / 2)?.mapped(0.0, grid_max);
        let half: Vec<(f64, f64)> = rule
            .nodes
            .iter()
            .copied()
            .zip(rule.weights.iter().copied())
            .collect();
        let mut nodes: Vec<f64> = half.iter().rev().map(|p| -p.0).collect();
        nodes.extend(half.iter().map(|p| p.0));
        let mut weights: Vec<f64> = half.iter().rev().map(|p| p.1).collect();
        weights.extend(half.iter().map(|p| p.1));
        let target = target.unwrap_or_else(|| nodes.clone());
        if target.windows(2).any(|w| !(w[1] > w[0])) || target.iter().any(|v| !v.is_finite()) {
            return domain("target grid must be finite and strictly increasing");
        }
        let mut abs: Vec<f64> = target.iter().map(|x| x.abs()).collect();
        abs.sort_by(f64::total_cmp);
        abs.dedup();
        let row_of = target
            .iter()
            .map(|x| {
                (
                    abs.partition_point(|&a| a < x.abs()),
                    if *x < 0.0 { -1.0 } else { 1.0 },
                )
            })
            .collect();
        let kernel = CoordinateKernel::new(k, DEFAULT_ORDER)?;
        let t_max = abs.last().copied().unwrap_or(0.0);
        let level = kernel.level_for(t_max * grid_max);
        let rows = abs
            .par_iter()
            .map(|&x| {
                half.iter()
                    .map(|&(y, _)| {
                        let e = kernel.imag_at(x * y, level);
                        (e.re, e.im)
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            ctx: ctx.clone(),
            nodes,
            weights,
            half,
            target,
            rows,
            row_of,
            kernel,
            level,
        })
    }

    /// Plan whose radius also covers the envelope `e^{-rate y^2}`.
    pub fn for_envelope(ctx: &DunklContext, n: usize, grid_max: f64, rate: f64) -> Result<Self> {
        Self::new(ctx, n, envelope_radius(ctx.kappa()[0], rate, grid_max))
    }

    pub fn context(&self) -> &DunklContext {
        &self.ctx
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Quadrature weights for `dmu_k` at the source nodes.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn grid_max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1].max(self.half.last().map_or(0.0, |p| p.0))
    }

    pub fn target_is_source(&self) -> bool {
        self.target == self.nodes
    }

    /// `E(i x y)` at a target point, with the plan's fixed rule.
    pub fn kernel_im(&self, x: f64, y: f64) -> Complex64 {
        self.kernel.imag_at(x * y, self.level)
    }

    pub fn sample<F: RealFunction + ?Sized>(&self, f: &F) -> SampledFunction<f64> {
        SampledFunction::from_fn_1d(self.nodes.clone(), |y| f.eval(y))
            .expect("plan nodes are increasing")
    }

    fn check_source<T: Copy>(&self, f: &SampledFunction<T>) -> Result<()> {
        if f.dim() != 1 || f.nodes() != self.nodes.as_slice() {
            return domain("input is not sampled on the plan's source nodes");
        }
        Ok(())
    }

    fn apply(&self, values: &[Complex64], sign: f64) -> Vec<Complex64> {
        let m = self.half.len();
        // node m + p is +y_p, node m - 1 - p is -y_p
        let parts: Vec<(Complex64, Complex64, f64)> = (0..m)
            .map(|p| {
                let plus = values[m + p];
                let minus = values[m - 1 - p];
                (0.5 * (plus + minus), 0.5 * (plus - minus), self.half[p].1)
            })
            .collect();
        let c2 = 2.0 * self.ctx.mehta_constant;
        self.row_of
            .par_iter()
            .map(|&(row, s)| {
                let r = &self.rows[row];
                let mut even = Complex64::new(0.0, 0.0);
                let mut odd = Complex64::new(0.0, 0.0);
                for (p, &(fe, fo, w)) in parts.iter().enumerate() {
                    let (cv, sv) = r[p];
                    even += fe * (w * cv);
                    odd += fo * (w * sv);
                }
                // S is odd in x: a negative target flips its sign
                c2 * (even + Complex64::new(0.0, sign * s) * odd)
            })
            .collect()
    }

    /// `F f` on the target grid.
    pub fn forward(&self, f: &SampledFunction<f64>) -> Result<ComplexSampled> {
        self.check_source(f)?;
        let v: Vec<Complex64> = f.values().iter().map(|&x| Complex64::new(x, 0.0)).collect();
        SampledFunction::new(vec![self.target.clone()], self.apply(&v, -1.0))
    }

    pub fn forward_complex(&self, f: &ComplexSampled) -> Result<ComplexSampled> {
        self.check_source(f)?;
        SampledFunction::new(vec![self.target.clone()], self.apply(f.values(), -1.0))
    }

    /// `c_k int E(ix, y) g(y) dmu_k(y)` on the target grid, with `g` sampled
    /// on the source nodes.
    pub fn inverse(&self, g: &ComplexSampled) -> Result<ComplexSampled> {
        self.check_source(g)?;
        SampledFunction::new(vec![self.target.clone()], self.apply(g.values(), 1.0))
    }

    /// `||f||_{2, mu}` by the source quadrature.
    pub fn l2_norm(&self, values: &[Complex64]) -> f64 {
        values
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| w * v.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `| ||F f|| - ||f|| | / ||f||`.
    pub fn plancherel_defect(&self, f: &SampledFunction<f64>) -> Result<f64> {
        if !self.target_is_source() {
            return domain("Plancherel defect needs the target grid to equal the source grid");
        }
        let fv: Vec<Complex64> = f.values().iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let nf = self.l2_norm(&fv);
        if nf == 0.0 {
            return domain("function has zero L2 norm");
        }
        let ff = self.forward(f)?;
        Ok((self.l2_norm(ff.values()) - nf).abs() / nf)
    }

    /// `||F^{-1} F f - f||_inf / ||f||_inf`.
    pub fn roundtrip_defect(&self, f: &SampledFunction<f64>) -> Result<f64> {
        if !self.target_is_source() {
            return domain("round trip needs the target grid to equal the source grid");
        }
        let back = self.inverse(&self.forward(f)?)?;
        let scale = f.sup_norm();
        if scale == 0.0 {
            return Ok(0.0);
        }
        Ok(back
            .values()
            .iter()
            .zip(f.values())
            .map(|(b, v)| (b - v).norm())
            .fold(0.0, f64::max)
            / scale)
    }

    /// `sup |F(tau_x f) - E(ix, .) F f|` on the target grid, with `tau_x f`
    /// sampled through the explicit translation.
    pub fn translation_symbol_check<F: RealFunction + ?Sized>(
        &self,
        tr: &Translator,
        f: &F,
        x: f64,
    ) -> Result<f64> {
        let shifted =
            SampledFunction::from_fn_1d(self.nodes.clone(), |y| tr.translate_1d(f, x, y))?;
        let lhs = self.forward(&shifted)?;
        let rhs = self.forward(&self.sample(f))?;
        Ok(lhs
            .values()
            .iter()
            .zip(rhs.values())
            .zip(&self.target)
            .map(|((a, b), &xi)| (a - self.kernel_im(x, xi) * b).norm())
            .fold(0.0, f64::max))
    }
}

/// Separable transform on a tensor grid, one plan per axis (`d <= 3`).
#[derive(Debug, Clone)]
pub struct TensorTransformPlan {
    axes: Vec<TransformPlan>,
}

impl TensorTransformPlan {
    pub fn new(ctx: &DunklContext, n: usize, grid_max: f64) -> Result<Self> {
        if ctx.d > 3 {
            return Err(DunklError::Capacity(format!(
                "tensor transforms support d <= 3, got {}",
                ctx.d
            )));
        }
        let axes = ctx
            .kappa()
            .iter()
            .map(|&k| TransformPlan::new(&DunklContext::one_dim(k)?, n, grid_max))
            .collect::<Result<_>>()?;
        Ok(Self { axes })
    }

    pub fn axis(&self, j: usize) -> &TransformPlan {
        &self.axes[j]
    }

    pub fn grid(&self) -> Vec<Vec<f64>> {
        self.axes.iter().map(|p| p.nodes().to_vec()).collect()
    }

    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> Result<ComplexSampled> {
        let axes = self.grid();
        let len: usize = axes.iter().map(Vec::len).product();
        let proto = SampledFunction::new(axes, vec![Complex64::new(0.0, 0.0); len])?;
        let values = (0..len)
            .map(|i| Complex64::new(f(&proto.point(i)), 0.0))
            .collect();
        proto.with_values(values)
    }

    fn apply(&self, f: &ComplexSampled, sign: f64) -> Result<ComplexSampled> {
        if f.axes() != self.grid().as_slice() {
            return domain("input is not sampled on the plan's tensor grid");
        }
        let dims: Vec<usize> = f.axes().iter().map(Vec::len).collect();
        let mut values = f.values().to_vec();
        for (j, plan) in self.axes.iter().enumerate() {
            let stride: usize = dims[j + 1..].iter().product();
            let outer: usize = dims[..j].iter().product();
            let n = dims[j];
            let mut next = values.clone();
            for o in 0..outer {
                for s in 0..stride {
                    let fiber: Vec<Complex64> =
                        (0..n).map(|i| values[(o * n + i) * stride + s]).collect();
                    let out = plan.apply(&fiber, sign);
                    for (i, v) in out.into_iter().enumerate() {
                        next[(o * n + i) * stride + s] = v;
                    }
                }
            }
            values = next;
        }
        f.with_values(values)
    }

    pub fn forward(&self, f: &ComplexSampled) -> Result<ComplexSampled> {
        self.apply(f, -1.0)
    }

    pub fn inverse(&self, g: &ComplexSampled) -> Result<ComplexSampled> {
        self.apply(g, 1.0)
    }

    /// Tensor quadrature weights for `dmu_k`.
    pub fn weights(&self) -> Vec<f64> {
        let mut w = vec![1.0];
        for p in &self.axes {
            w = w
                .iter()
                .flat_map(|a| p.weights().iter().map(move |b| a * b))
                .collect();
        }
        w
    }
}
