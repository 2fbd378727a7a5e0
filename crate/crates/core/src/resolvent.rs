//! Discrete operator `𝒜_h` on a log grid and banded solves of the resolvent
//! equation `(λ + 𝒜)u = g`.
//!
//! Interior rows hold `x²(λ + 𝒜)`, i.e. `λx² + x p(D) + q(D)`. Rows 0 and 1
//! impose `(D-1)(D-2)u = 0`, which admits the contact-line modes `x`, `x²`
//! and rejects `1` and `x ln x`. The last two rows impose `λu = g`.

use crate::banded::{BandedLu, BandedMatrix};
use crate::error::{Error, Result};
use crate::grid::{
    contact_line_coefficients, d_derivative, decay_probe, GridFunction, LogGrid, Stencil,
};
use crate::polyops::PolynomialOperator;
use serde::{Deserialize, Serialize};

/// Half-bandwidth of the assembled matrix.
pub const HALF_BANDWIDTH: usize = 6;
/// Minimum number of grid nodes accepted by [`DiscreteOperator::assemble`].
pub const MIN_OPERATOR_NODES: usize = 64;
/// Rows replaced by the contact-line closure.
const LEFT_CLOSURE: usize = 2;
/// Rows replaced by the far-field closure.
const RIGHT_CLOSURE: usize = 2;
/// Iterative refinement sweeps after the LU solve.
const REFINE_SWEEPS: usize = 2;

/// `𝒜_h` with closure rows, stored in banded form.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub grid: LogGrid,
    band: BandedMatrix,
}

impl DiscreteOperator {
    /// Assembles the closure-augmented operator for `grid`.
    pub fn assemble(grid: LogGrid) -> Result<Self> {
        let n = grid.n;
        if n < MIN_OPERATOR_NODES {
            return Err(Error::GridTooSmall {
                need: MIN_OPERATOR_NODES,
                have: n,
            });
        }
        let h = grid.h();
        let pc = PolynomialOperator::p().coefficients();
        let qc = PolynomialOperator::q().coefficients();
        let stencils = (1..=4)
            .map(|j| Stencil::new(n, h, j, 1))
            .collect::<Result<Vec<_>>>()?;
        let mut band = BandedMatrix::zeros(n, HALF_BANDWIDTH, HALF_BANDWIDTH);
        // (D-1)(D-2) = D² - 3D + 2
        for i in 0..LEFT_CLOSURE {
            band.add(i, i, 2.0);
            for (col, w) in stencils[0].row(i).entries() {
                band.add(i, col, -3.0 * w);
            }
            for (col, w) in stencils[1].row(i).entries() {
                band.add(i, col, w);
            }
        }
        for i in LEFT_CLOSURE..n - RIGHT_CLOSURE {
            let x = grid.x(i);
            band.add(i, i, x * pc[0] + qc[0]);
            for (j, st) in stencils.iter().enumerate() {
                let c = x * pc[j + 1] + qc[j + 1];
                if c != 0.0 {
                    for (col, w) in st.row(i).entries() {
                        band.add(i, col, c * w);
                    }
                }
            }
        }
        Ok(Self { grid, band })
    }

    /// `𝒜_h w` on the interior rows; closure rows are reported as zero.
    pub fn apply(&self, w: &GridFunction) -> Result<GridFunction> {
        if w.grid != self.grid {
            return Err(Error::GridMismatch);
        }
        let n = self.grid.n;
        let raw = self.band.mul_vec(&w.values);
        let values = (0..n)
            .map(|i| {
                if (LEFT_CLOSURE..n - RIGHT_CLOSURE).contains(&i) {
                    raw[i] / self.grid.x(i).powi(2)
                } else {
                    0.0
                }
            })
            .collect();
        Ok(GridFunction { grid: self.grid, values })
    }

    /// Rows solved by the interior equation.
    pub fn interior(&self) -> std::ops::Range<usize> {
        LEFT_CLOSURE..self.grid.n - RIGHT_CLOSURE
    }

    /// Factorizes `λ + 𝒜_h` for repeated solves.
    pub fn resolvent(&self, lambda: f64) -> Result<ResolventSolver> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParameter {
                name: "lambda",
                reason: format!("must be positive and finite, got {lambda}"),
            });
        }
        let n = self.grid.n;
        let mut m = self.band.clone();
        for i in self.interior() {
            m.add(i, i, lambda * self.grid.x(i).powi(2));
        }
        for i in n - RIGHT_CLOSURE..n {
            m.set(i, i, 1.0);
        }
        let row_scale: Vec<f64> = (0..n)
            .map(|i| {
                let (kl, ku) = m.bandwidths();
                let cols = i.saturating_sub(kl)..=(i + ku).min(n - 1);
                let big = cols.map(|j| m.get(i, j).abs()).fold(0.0, f64::max);
                if big > 0.0 { big.recip() } else { 1.0 }
            })
            .collect();
        let mut scaled = m.clone();
        for (i, &r) in row_scale.iter().enumerate() {
            let (kl, ku) = m.bandwidths();
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                scaled.set(i, j, r * m.get(i, j));
            }
        }
        let lu = scaled.factor()?;
        Ok(ResolventSolver {
            op: self.clone(),
            lambda,
            matrix: scaled,
            row_scale,
            lu,
        })
    }
}

/// Cached factorization of `λ + 𝒜_h`.
#[derive(Debug, Clone)]
pub struct ResolventSolver {
    op: DiscreteOperator,
    lambda: f64,
    /// Row-equilibrated system matrix.
    matrix: BandedMatrix,
    row_scale: Vec<f64>,
    lu: BandedLu,
}

/// Output of a resolvent solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolventSolve {
    pub lambda: f64,
    #[serde(skip)]
    pub solution: Option<GridFunction>,
    /// Componentwise backward error of the banded solve, see [`ResolventSolver::residual`].
    pub residual_norm: f64,
    /// Far-field slope from [`far_field_rate`]; `None` when the tail underflows or does not decay.
    pub decay_rate_fit: Option<f64>,
    /// `u₁, u₂, u₃` from [`contact_line_coefficients`].
    pub coefficients: Vec<f64>,
}

impl ResolventSolver {
    /// Spectral parameter of the factorization.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// The underlying operator.
    pub fn operator(&self) -> &DiscreteOperator {
        &self.op
    }

    /// Solves without compatibility probe or diagnostics.
    pub fn solve_raw(&self, g: &GridFunction) -> Result<GridFunction> {
        if g.grid != self.op.grid {
            return Err(Error::GridMismatch);
        }
        let n = g.len();
        let mut b = vec![0.0; n];
        for i in self.op.interior() {
            b[i] = g.values[i] * self.op.grid.x(i).powi(2);
        }
        for i in n - RIGHT_CLOSURE..n {
            b[i] = g.values[i] / self.lambda;
        }
        for (bi, r) in b.iter_mut().zip(&self.row_scale) {
            *bi *= r;
        }
        let rhs = b.clone();
        self.lu.solve_in_place(&mut b);
        for _ in 0..REFINE_SWEEPS {
            let mut r: Vec<f64> = self
                .matrix
                .mul_vec(&b)
                .iter()
                .zip(&rhs)
                .map(|(a, c)| c - a)
                .collect();
            self.lu.solve_in_place(&mut r);
            for (bi, ri) in b.iter_mut().zip(&r) {
                *bi += ri;
            }
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "resolvent solve",
            });
        }
        Ok(GridFunction {
            grid: g.grid,
            values: b,
        })
    }

    /// Componentwise backward error `max_i |(Mu - b)_i| / (|M||u| + |b|)_i`
    /// of the row-equilibrated system over the interior rows.
    pub fn residual(&self, u: &GridFunction, g: &GridFunction) -> f64 {
        let n = u.len();
        let mu = self.matrix.mul_vec(&u.values);
        let au: Vec<f64> = {
            let (kl, ku) = self.matrix.bandwidths();
            (0..n)
                .map(|i| {
                    (i.saturating_sub(kl)..=(i + ku).min(n - 1))
                        .map(|j| (self.matrix.get(i, j) * u.values[j]).abs())
                        .sum()
                })
                .collect()
        };
        self.op
            .interior()
            .map(|i| {
                let b = g.values[i] * self.op.grid.x(i).powi(2) * self.row_scale[i];
                let den = au[i] + b.abs();
                if den > 0.0 { (mu[i] - b).abs() / den } else { 0.0 }
            })
            .fold(0.0, f64::max)
    }

    /// Full solve: compatibility probe on `g`, banded solve and diagnostics.
    pub fn solve(&self, g: &GridFunction) -> Result<ResolventSolve> {
        decay_probe(g)?;
        let u = self.solve_raw(g)?;
        let residual_norm = self.residual(&u, g);
        let decay_rate_fit = far_field_rate(&u, self.lambda).ok();
        let coefficients = contact_line_coefficients(&u)?.to_vec();
        Ok(ResolventSolve {
            lambda: self.lambda,
            solution: Some(u),
            residual_norm,
            decay_rate_fit,
            coefficients,
        })
    }
}

/// Solves `(λ + 𝒜_h)u = g` with a fresh factorization.
pub fn solve(op: &DiscreteOperator, lambda: f64, g: &GridFunction) -> Result<ResolventSolve> {
    op.resolvent(lambda)?.solve(g)
}

/// Smallest `s_max` with `exp(-2√2 (λ x_max)^{1/4}) < tol`.
pub fn far_field_s_max(lambda: f64, tol: f64) -> f64 {
    let r = -tol.ln() / (2.0 * std::f64::consts::SQRT_2);
    (r.powi(4) / lambda).ln()
}

/// Values below this are treated as underflowed in [`far_field_rate`].
const TAIL_FLOOR: f64 = 1e-250;
/// Minimum number of usable tail nodes.
const TAIL_NODES: usize = 10;

/// Slope of `-ln E` against `ρ = 4(λx)^{1/4}` over the far-field band, where
/// `E² = u² + (u + √2 ∂ᵨu)²` removes the oscillation of the decaying modes.
///
/// The band is `x ≥ 1` restricted to its right half, minus the last 5% of
/// the grid next to the far-field closure.
pub fn far_field_rate(u: &GridFunction, lambda: f64) -> Result<f64> {
    let g = u.grid;
    let n = g.n;
    let du = d_derivative(u, 1)?;
    let first = (0..n).find(|&i| g.x(i) >= 1.0).ok_or(Error::NoDecay)?;
    let last = n - (n / 20).max(RIGHT_CLOSURE + 1);
    if last <= first {
        return Err(Error::NoDecay);
    }
    let lo = first + (last - first) / 2;
    let mut pts = Vec::new();
    for i in lo..last {
        let rho = 4.0 * (lambda * g.x(i)).powf(0.25);
        let d_rho = 4.0 / rho * du.values[i];
        let v = u.values[i];
        let e = (v * v + (v + std::f64::consts::SQRT_2 * d_rho).powi(2)).sqrt();
        if e > TAIL_FLOOR && e.is_finite() {
            pts.push((rho, -e.ln()));
        }
    }
    if pts.len() < TAIL_NODES {
        return Err(Error::NoDecay);
    }
    let m = pts.len() as f64;
    let (mx, my) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x / m, b + y / m));
    let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| {
        (a + (x - mx) * (y - my), b + (x - mx) * (x - mx))
    });
    let slope = sxy / sxx;
    if !(slope > 0.0) {
        return Err(Error::NoDecay);
    }
    Ok(slope)
}

/// `λu + 𝒜u` for `u = x²e^{-x}`, evaluated by hand.
pub fn manufactured_rhs(lambda: f64, x: f64) -> f64 {
    let poly = (((x - 10.0) * x + 20.0) * x + 6.0) * x * x - 12.0 * x;
    (lambda * x * x + poly) * (-x).exp()
}
