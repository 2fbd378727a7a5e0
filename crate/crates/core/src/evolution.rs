//! Implicit Euler for `∂ₜu + 𝒜u = f` with step-averaged forcing, energy
//! monitoring in the `(D-1)`-commuted variable and coefficient tracking.

use crate::error::{Error, Result};
use crate::grid::{contact_line_coefficients, d_derivative, weighted_norm_sq, GridFunction, NormSpec};
use crate::polyops::PolynomialOperator;
use crate::resolvent::{DiscreteOperator, ResolventSolver};
use serde::{Deserialize, Serialize};

/// Largest accepted number of time steps.
pub const MAX_STEPS: usize = 1_000_000;
/// Relative per-step slack before an energy increase is flagged.
pub const ENERGY_SLACK: f64 = 1e-10;

/// Time-dependent forcing `f(t)`.
pub type Forcing<'a> = &'a dyn Fn(f64) -> GridFunction;

/// Step parameters and monitor weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Weight of the energy `|(D-1)u|²_{α̃}`.
    pub alpha: f64,
    /// Derivative order of the second monitored energy.
    pub k: usize,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            dt: 1e-2,
            t_end: 2.0,
            alpha: 0.25,
            k: 2,
        }
    }
}

impl EvolutionConfig {
    /// Number of steps `round(T/δt)` after validation.
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidParameter {
                name: "dt",
                reason: format!("must be positive, got {}", self.dt),
            });
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(Error::InvalidParameter {
                name: "T",
                reason: format!("must be non-negative, got {}", self.t_end),
            });
        }
        let steps = (self.t_end / self.dt).round();
        if steps > MAX_STEPS as f64 {
            return Err(Error::InvalidParameter {
                name: "T",
                reason: format!("T/dt = {steps} exceeds {MAX_STEPS}"),
            });
        }
        Ok(steps as usize)
    }

    /// Monitored norms: `|·|_{0,α̃}` and `|·|_{k,α̃}`.
    pub fn monitors(&self) -> Vec<NormSpec> {
        vec![NormSpec::new(0, self.alpha), NormSpec::new(self.k, self.alpha)]
    }
}

/// A monitored energy that grew beyond [`ENERGY_SLACK`] in one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyFlag {
    pub step: usize,
    pub monitor: usize,
    pub relative_increase: f64,
}

/// Trajectory with per-step diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionState {
    pub config: EvolutionConfig,
    pub monitors: Vec<NormSpec>,
    pub times: Vec<f64>,
    #[serde(skip)]
    pub states: Vec<GridFunction>,
    /// `energy_log[n][m]` is monitor `m` of `(D-1)u` at step `n`.
    pub energy_log: Vec<Vec<f64>>,
    /// `(u₁, u₂, u₃)` per step.
    pub coefficient_tracks: Vec<[f64; 3]>,
    pub flags: Vec<EnergyFlag>,
    /// Picard sweeps per step (nonlinear runs only).
    pub picard_iterations: Vec<usize>,
    /// `sup |v_x|` per step (nonlinear runs only).
    pub lipschitz: Vec<f64>,
    /// Contact line `Y₀(t)` per step (nonlinear runs only).
    pub contact_line: Vec<f64>,
}

impl EvolutionState {
    /// Empty state for `config` and `monitors`.
    pub fn new(config: EvolutionConfig, monitors: Vec<NormSpec>) -> Self {
        Self {
            config,
            monitors,
            times: Vec::new(),
            states: Vec::new(),
            energy_log: Vec::new(),
            coefficient_tracks: Vec::new(),
            flags: Vec::new(),
            picard_iterations: Vec::new(),
            lipschitz: Vec::new(),
            contact_line: Vec::new(),
        }
    }

    /// Appends a state with its energies and coefficients, flagging growth of
    /// the `k = 0` monitors. Higher monitors are logged dissipation terms.
    pub fn record(&mut self, t: f64, u: GridFunction) -> Result<()> {
        let energies = energies(&u, &self.monitors)?;
        if let Some(prev) = self.energy_log.last() {
            let step = self.times.len();
            for (m, (&e, &p)) in energies.iter().zip(prev).enumerate() {
                if self.monitors[m].k == 0 && e > p * (1.0 + ENERGY_SLACK) && e > 0.0 {
                    self.flags.push(EnergyFlag {
                        step,
                        monitor: m,
                        relative_increase: if p > 0.0 { e / p - 1.0 } else { f64::INFINITY },
                    });
                }
            }
        }
        self.coefficient_tracks.push(track_coefficients(&u)?);
        self.energy_log.push(energies);
        self.times.push(t);
        self.states.push(u);
        Ok(())
    }

    /// Final state.
    pub fn last(&self) -> Option<&GridFunction> {
        self.states.last()
    }

    /// Residuals of `du₁/dt + p(2)u₂ + q(3)u₃ - f₁` using backward differences,
    /// each relative to the largest of its terms.
    pub fn coefficient_relation(&self, f1: impl Fn(f64) -> f64) -> Vec<f64> {
        let p2 = PolynomialOperator::p().eval(2.0);
        let q3 = PolynomialOperator::q().eval(3.0);
        (1..self.times.len())
            .map(|n| {
                let dt = self.times[n] - self.times[n - 1];
                let c = self.coefficient_tracks[n];
                let du1 = (c[0] - self.coefficient_tracks[n - 1][0]) / dt;
                let f = f1(self.times[n]);
                let terms = [du1, p2 * c[1], q3 * c[2], f];
                let scale = terms.iter().fold(0.0f64, |a, t| a.max(t.abs()));
                let r = terms[0] + terms[1] + terms[2] - terms[3];
                if scale > 0.0 { r.abs() / scale } else { 0.0 }
            })
            .collect()
    }
}

/// `(u₁, u₂, u₃)`, or zeros when `u` vanishes.
fn track_coefficients(u: &GridFunction) -> Result<[f64; 3]> {
    if u.max_abs() == 0.0 {
        return Ok([0.0; 3]);
    }
    contact_line_coefficients(u)
}

/// Monitored energies of `ũ = (D-1)u`.
pub fn energies(u: &GridFunction, monitors: &[NormSpec]) -> Result<Vec<f64>> {
    let ut = d_derivative(u, 1)?.sub(u)?;
    monitors.iter().map(|m| weighted_norm_sq(&ut, *m)).collect()
}

/// Simpson average of `f` over `[(j-1)δt, jδt]`.
pub fn average_rhs(f: Forcing<'_>, j: usize, dt: f64) -> Result<GridFunction> {
    let a = (j as f64 - 1.0) * dt;
    let (fa, fm, fb) = (f(a), f(a + 0.5 * dt), f(a + dt));
    fa.axpby(1.0 / 6.0, &fm, 4.0 / 6.0)?.axpby(1.0, &fb, 1.0 / 6.0)
}

/// One implicit Euler step `(u - u_prev)/δt + 𝒜u = f_avg`; `solver` must hold `λ = 1/δt`.
pub fn step(solver: &ResolventSolver, u_prev: &GridFunction, f_avg: Option<&GridFunction>) -> Result<GridFunction> {
    let lambda = solver.lambda();
    let mut g = u_prev.scale(lambda);
    if let Some(f) = f_avg {
        g = g.add(f)?;
    }
    solver.solve_raw(&g)
}

/// Runs implicit Euler on `[0, T]` with one cached factorization.
pub fn run(
    op: &DiscreteOperator,
    u0: &GridFunction,
    f: Option<Forcing<'_>>,
    config: EvolutionConfig,
    monitors: Vec<NormSpec>,
) -> Result<EvolutionState> {
    let steps = config.steps()?;
    if u0.grid != op.grid {
        return Err(Error::GridMismatch);
    }
    let solver = op.resolvent(1.0 / config.dt)?;
    let mut state = EvolutionState::new(config, monitors);
    state.record(0.0, u0.clone())?;
    let mut u = u0.clone();
    for j in 1..=steps {
        let favg = match f {
            Some(f) => Some(average_rhs(f, j, config.dt)?),
            None => None,
        };
        u = step(&solver, &u, favg.as_ref())?;
        state.record(j as f64 * config.dt, u.clone())?;
    }
    Ok(state)
}

/// `E_final / (E_init + ∫ |f|² dt)` in the first monitored norm; the
/// empirical maximal-regularity constant of a forced run.
pub fn regularity_ratio(state: &EvolutionState, f: Forcing<'_>) -> Result<f64> {
    let m = *state.monitors.first().ok_or(Error::InvalidParameter {
        name: "monitors",
        reason: "at least one monitor is required".into(),
    })?;
    let e0 = state.energy_log.first().map_or(0.0, |e| e[0]);
    let e1 = state.energy_log.last().map_or(0.0, |e| e[0]);
    let mut rhs = 0.0;
    for w in state.times.windows(2) {
        let fa = energies(&f(w[0]), &[m])?[0];
        let fb = energies(&f(w[1]), &[m])?[0];
        rhs += 0.5 * (w[1] - w[0]) * (fa + fb);
    }
    let den = e0 + rhs;
    Ok(if den > 0.0 { e1 / den } else { 0.0 })
}
