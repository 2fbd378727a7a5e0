//! Uniform grids in the logarithmic coordinate `s = ln x`, grid functions,
//! finite-difference powers of `D = d/ds`, weighted norms and expansion fits.

mod fit;
mod norms;
mod stencil;

pub use fit::{
    contact_line_coefficients, cumulative_integral, cumulative_trapezoid, decay_probe, extract_coefficients, fit_power_series, DecayFit,
    FIT_BAND, NEAR_FIELD_X,
};
pub use norms::{
    composite_init, composite_trajectory, index_set_i, index_set_j, weighted_norm,
    weighted_norm_sq, CompositeKind, CompositeParams, IndexTriple, NormReport, NormSpec,
    NormTerm, Trajectory,
};
pub use stencil::{
    d_derivative, d_power, fornberg_weights, high_order_stride, DiffRow, Stencil,
};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Minimum number of nodes accepted by [`LogGrid::new`].
pub const MIN_NODES: usize = 16;

/// Uniform grid in `s = ln x` on `[s_min, s_max]` with `n` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogGrid {
    pub s_min: f64,
    pub s_max: f64,
    pub n: usize,
}

impl Default for LogGrid {
    fn default() -> Self {
        Self {
            s_min: -12.0,
            s_max: 4.0,
            n: 1025,
        }
    }
}

impl LogGrid {
    /// Validated constructor.
    pub fn new(s_min: f64, s_max: f64, n: usize) -> Result<Self> {
        if !(s_min.is_finite() && s_max.is_finite()) || s_min >= s_max {
            return Err(Error::InvalidParameter {
                name: "s_min/s_max",
                reason: format!("need finite s_min < s_max, got [{s_min}, {s_max}]"),
            });
        }
        if n < MIN_NODES {
            return Err(Error::GridTooSmall {
                need: MIN_NODES,
                have: n,
            });
        }
        Ok(Self { s_min, s_max, n })
    }

    /// Node spacing in `s`.
    pub fn h(&self) -> f64 {
        (self.s_max - self.s_min) / (self.n - 1) as f64
    }

    /// Coordinate `s_i`.
    pub fn s(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.s_max
        } else {
            self.s_min + i as f64 * self.h()
        }
    }

    /// Coordinate `x_i = e^{s_i}`.
    pub fn x(&self, i: usize) -> f64 {
        self.s(i).exp()
    }

    /// All `s` nodes.
    pub fn s_nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.s(i)).collect()
    }

    /// All `x` nodes.
    pub fn x_nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Samples `f(x)` at the nodes.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction {
            grid: *self,
            values: (0..self.n).map(|i| f(self.x(i))).collect(),
        }
    }

    /// Samples `f(s)` at the nodes.
    pub fn sample_s(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction {
            grid: *self,
            values: (0..self.n).map(|i| f(self.s(i))).collect(),
        }
    }

    /// Zero function.
    pub fn zeros(&self) -> GridFunction {
        GridFunction {
            grid: *self,
            values: vec![0.0; self.n],
        }
    }

    /// Index of the last node with `s <= s_hi`, or `None` if there is none.
    pub fn last_index_below(&self, s_hi: f64) -> Option<usize> {
        if s_hi < self.s_min {
            return None;
        }
        let k = ((s_hi - self.s_min) / self.h() + 1e-9).floor() as usize;
        Some(k.min(self.n - 1))
    }

    /// Same grid with `n` replaced.
    pub fn with_nodes(&self, n: usize) -> Result<Self> {
        Self::new(self.s_min, self.s_max, n)
    }
}

/// Real samples on a [`LogGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: LogGrid,
    pub values: Vec<f64>,
}

impl GridFunction {
    /// Checked constructor: lengths must match and values must be finite.
    pub fn new(grid: LogGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::GridTooSmall {
                need: grid.n,
                have: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "grid function samples",
            });
        }
        Ok(Self { grid, values })
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// True when there are no samples.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Pointwise `a·self + b·other`.
    pub fn axpby(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        self.check(other)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(u, v)| a * u + b * v)
                .collect(),
        })
    }

    /// `self + other`.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.axpby(1.0, other, 1.0)
    }

    /// `self - other`.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpby(1.0, other, -1.0)
    }

    /// `c·self`.
    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// Applies `f` to every sample.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Applies `f(x_i, v_i)` to every sample.
    pub fn map_x(&self, f: impl Fn(f64, f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .enumerate()
                .map(|(i, &v)| f(self.grid.x(i), v))
                .collect(),
        }
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(u, v)| u * v)
                .collect(),
        })
    }

    /// Maximum absolute value.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Maximum absolute value over `lo..hi`.
    pub fn max_abs_range(&self, lo: usize, hi: usize) -> f64 {
        self.values[lo..hi].iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |self - other| / max |other|` over the nodes `lo..hi`.
    pub fn rel_error_range(&self, reference: &Self, lo: usize, hi: usize) -> Result<f64> {
        self.check(reference)?;
        let num = (lo..hi).fold(0.0f64, |m, i| {
            m.max((self.values[i] - reference.values[i]).abs())
        });
        let den = reference.max_abs_range(lo, hi);
        Ok(if den == 0.0 { num } else { num / den })
    }

    /// True if every sample within `margin` nodes of either edge is zero.
    pub fn vanishes_near_edges(&self, margin: usize) -> bool {
        let n = self.len();
        let m = margin.min(n);
        self.values[..m].iter().all(|v| *v == 0.0) && self.values[n - m..].iter().all(|v| *v == 0.0)
    }

    /// Trapezoid integral `∫ self ds`.
    pub fn integrate(&self) -> f64 {
        let h = self.grid.h();
        let n = self.len();
        let inner: f64 = self.values[1..n - 1].iter().sum();
        h * (inner + 0.5 * (self.values[0] + self.values[n - 1]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_nodes_are_uniform() {
        let g = LogGrid::new(-3.0, 5.0, 33).unwrap();
        assert_eq!(g.s(0), -3.0);
        assert_eq!(g.s(32), 5.0);
        assert!((g.h() - 0.25).abs() < 1e-15);
        for i in 0..32 {
            assert!((g.s(i + 1) - g.s(i) - 0.25).abs() < 1e-14);
        }
    }

    #[test]
    fn grid_rejects_bad_parameters() {
        assert!(matches!(
            LogGrid::new(1.0, 0.0, 100),
            Err(Error::InvalidParameter { .. })
        ));
        assert!(matches!(
            LogGrid::new(0.0, 1.0, 8),
            Err(Error::GridTooSmall { need: 16, have: 8 })
        ));
    }

    #[test]
    fn arithmetic_requires_identical_grids() {
        let a = LogGrid::new(0.0, 1.0, 16).unwrap().zeros();
        let b = LogGrid::new(0.0, 2.0, 16).unwrap().zeros();
        assert_eq!(a.add(&b).unwrap_err(), Error::GridMismatch);
    }

    #[test]
    fn non_finite_samples_rejected() {
        let g = LogGrid::new(0.0, 1.0, 16).unwrap();
        let mut v = vec![0.0; 16];
        v[3] = f64::NAN;
        assert!(matches!(
            GridFunction::new(g, v),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn trapezoid_integrates_exponential() {
        let g = LogGrid::new(-2.0, 1.0, 2049).unwrap();
        let w = g.sample_s(f64::exp);
        let exact = 1f64.exp() - (-2f64).exp();
        assert!((w.integrate() - exact).abs() < 1e-6);
    }
}
