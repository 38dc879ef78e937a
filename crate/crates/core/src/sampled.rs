//! Functions sampled on tensor grids.

use num_complex::Complex64;

use crate::error::{domain, DunklError, Result};

/// Values on a tensor grid, stored row-major with the last axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction<T = f64> {
    axes: Vec<Vec<f64>>,
    values: Vec<T>,
    bounds: Vec<(f64, f64)>,
}

pub type ComplexSampled = SampledFunction<Complex64>;

impl<T: Copy> SampledFunction<T> {
    pub fn new(axes: Vec<Vec<f64>>, values: Vec<T>) -> Result<Self> {
        if axes.is_empty() {
            return domain("sampled function needs at least one axis");
        }
        for (i, ax) in axes.iter().enumerate() {
            if ax.is_empty() {
                return domain(format!("axis {i} is empty"));
            }
            if ax.windows(2).any(|w| !(w[1] > w[0])) || ax.iter().any(|v| !v.is_finite()) {
                return domain(format!(
                    "axis {i} nodes must be finite and strictly increasing"
                ));
            }
        }
        let len: usize = axes.iter().map(Vec::len).product();
        if values.len() != len {
            return Err(DunklError::DimensionMismatch {
                expected: len,
                got: values.len(),
            });
        }
        let bounds = axes.iter().map(|ax| (ax[0], ax[ax.len() - 1])).collect();
        Ok(Self {
            axes,
            values,
            bounds,
        })
    }

    pub fn from_fn_1d(nodes: Vec<f64>, mut f: impl FnMut(f64) -> T) -> Result<Self> {
        let values = nodes.iter().map(|&x| f(x)).collect();
        Self::new(vec![nodes], values)
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    /// Nodes of a one-dimensional sample.
    pub fn nodes(&self) -> &[f64] {
        &self.axes[0]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn same_grid<U>(&self, other: &SampledFunction<U>) -> bool {
        self.axes == other.axes
    }

    pub fn map<U: Copy>(&self, f: impl FnMut(T) -> U) -> SampledFunction<U> {
        SampledFunction {
            axes: self.axes.clone(),
            values: self.values.iter().copied().map(f).collect(),
            bounds: self.bounds.clone(),
        }
    }

    /// Replace the values, keeping the grid.
    pub fn with_values<U: Copy>(&self, values: Vec<U>) -> Result<SampledFunction<U>> {
        if values.len() != self.values.len() {
            return Err(DunklError::DimensionMismatch {
                expected: self.values.len(),
                got: values.len(),
            });
        }
        Ok(SampledFunction {
            axes: self.axes.clone(),
            values,
            bounds: self.bounds.clone(),
        })
    }

    /// Multi-index of the flat position `i`.
    pub fn index_of(&self, mut i: usize) -> Vec<usize> {
        let mut idx = vec![0; self.axes.len()];
        for (a, ax) in self.axes.iter().enumerate().rev() {
            idx[a] = i % ax.len();
            i /= ax.len();
        }
        idx
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        self.index_of(i)
            .iter()
            .zip(&self.axes)
            .map(|(&k, ax)| ax[k])
            .collect()
    }
}

impl SampledFunction<f64> {
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Piecewise-linear interpolation of a one-dimensional sample, zero
    /// outside the grid.
    pub fn interpolate(&self, x: f64) -> f64 {
        let nodes = self.nodes();
        let (lo, hi) = self.bounds[0];
        if x < lo || x > hi {
            return 0.0;
        }
        let k = nodes.partition_point(|&n| n <= x);
        if k == 0 {
            return self.values[0];
        }
        if k == nodes.len() {
            return self.values[nodes.len() - 1];
        }
        let (x0, x1) = (nodes[k - 1], nodes[k]);
        let (v0, v1) = (self.values[k - 1], self.values[k]);
        v0 + (v1 - v0) * (x - x0) / (x1 - x0)
    }
}

impl SampledFunction<Complex64> {
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }
}

/// `n` equally spaced nodes on `[-max, max]`.
pub fn symmetric_grid(max: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    let h = 2.0 * max / (n - 1) as f64;
    (0..n)
        .map(|i| {
            let j = i as f64 - 0.5 * (n - 1) as f64;
            j * h
        })
        .collect()
}
