//! Shared fixtures for the benchmarks.

use tfstab::{GridFunction, LogGrid, Result};

/// Default grid `s ∈ [-12, 4]` with `n` nodes.
pub fn grid(n: usize) -> Result<LogGrid> {
    LogGrid::new(-12.0, 4.0, n)
}

/// Tapered perturbation `ε(3x² + 2x)e^{-x}`.
pub fn perturbation(grid: &LogGrid, eps: f64) -> GridFunction {
    grid.sample(|x| eps * x * (3.0 * x + 2.0) * (-x).exp())
}
