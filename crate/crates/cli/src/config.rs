//! TOML experiment configuration with validation against module preconditions.

use crate::error::CliError;
use serde::{Deserialize, Serialize};
use std::path::Path;
use tfstab::evolution::{EvolutionConfig, MAX_STEPS};
use tfstab::grid::CompositeParams;
use tfstab::nonlinear::NonlinearConfig;
use tfstab::resolvent::MIN_OPERATOR_NODES;
use tfstab::LogGrid;

/// Grid in `s = ln x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub s_min: f64,
    pub s_max: f64,
    pub n: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            s_min: -12.0,
            s_max: 4.0,
            n: 1025,
        }
    }
}

/// Time stepping and resolvent parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    pub lambdas: Vec<f64>,
    /// Weight of the monitored energy `|(D-1)u|²_{α̃}`.
    pub alpha: f64,
    /// Derivative order of the second monitored energy.
    pub k: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: 1e-2,
            t_end: 2.0,
            lambdas: vec![1.0],
            alpha: 0.25,
            k: 2,
        }
    }
}

/// Norm parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NormsConfig {
    pub n: usize,
    pub k: usize,
    pub delta: f64,
    pub alphas: Vec<f64>,
}

impl Default for NormsConfig {
    fn default() -> Self {
        Self {
            n: 1,
            k: 3,
            delta: 0.25,
            alphas: vec![0.25, 0.5],
        }
    }
}

/// Perturbation and Picard parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NonlinearSection {
    /// Amplitude of `u0 = ε(3x² + 2x)e^{-taper·x}`.
    pub epsilon: f64,
    pub taper: f64,
    pub picard_tol: f64,
    pub picard_max: usize,
    pub lipschitz_threshold: f64,
    /// Times of film snapshots; empty means the first and last step.
    pub snapshot_times: Vec<f64>,
}

impl Default for NonlinearSection {
    fn default() -> Self {
        let d = NonlinearConfig::default();
        Self {
            epsilon: 1e-3,
            taper: 1.0,
            picard_tol: d.picard_tol,
            picard_max: d.picard_max,
            lipschitz_threshold: d.lipschitz_threshold,
            snapshot_times: Vec::new(),
        }
    }
}

/// Output location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: "tfstab-out".into(),
        }
    }
}

/// Full experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Seed for randomized suites.
    pub seed: u64,
    pub grid: GridConfig,
    pub solver: SolverConfig,
    pub norms: NormsConfig,
    pub nonlinear: NonlinearSection,
    pub output: OutputConfig,
}

fn bad(key: &str, reason: impl Into<String>) -> CliError {
    CliError::Config {
        key: key.into(),
        reason: reason.into(),
    }
}

fn finite(key: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad(key, format!("must be finite, got {v}")))
    }
}

impl ExperimentConfig {
    /// Parses TOML text and validates it.
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a config file; `None` gives the validated defaults.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
                Self::from_toml(&text)
            }
        }
    }

    /// Checks every field against the preconditions of the module that uses it.
    pub fn validate(&self) -> Result<(), CliError> {
        let g = &self.grid;
        finite("grid.s_min", g.s_min)?;
        finite("grid.s_max", g.s_max)?;
        if g.s_max <= g.s_min {
            return Err(bad("grid.s_max", "must exceed grid.s_min"));
        }
        if g.n < MIN_OPERATOR_NODES {
            return Err(bad("grid.n", format!("must be at least {MIN_OPERATOR_NODES}, got {}", g.n)));
        }
        let s = &self.solver;
        if !(finite("solver.dt", s.dt)? > 0.0) {
            return Err(bad("solver.dt", "must be positive"));
        }
        if !(finite("solver.t_end", s.t_end)? >= 0.0) {
            return Err(bad("solver.t_end", "must be non-negative"));
        }
        if s.t_end / s.dt > MAX_STEPS as f64 {
            return Err(bad("solver.t_end", format!("t_end/dt exceeds {MAX_STEPS} steps")));
        }
        if s.lambdas.is_empty() || s.lambdas.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(bad("solver.lambdas", "need at least one positive finite value"));
        }
        finite("solver.alpha", s.alpha)?;
        let n = &self.norms;
        if n.n > 2 {
            return Err(bad("norms.n", format!("must be at most 2, got {}", n.n)));
        }
        if !(n.delta > 0.0 && n.delta < 0.5) {
            return Err(bad("norms.delta", format!("must lie in (0, 1/2), got {}", n.delta)));
        }
        for &a in &n.alphas {
            finite("norms.alphas", a)?;
        }
        let nl = &self.nonlinear;
        finite("nonlinear.epsilon", nl.epsilon)?;
        if !(finite("nonlinear.taper", nl.taper)? > 0.0) {
            return Err(bad("nonlinear.taper", "must be positive"));
        }
        if !(finite("nonlinear.picard_tol", nl.picard_tol)? > 0.0) {
            return Err(bad("nonlinear.picard_tol", "must be positive"));
        }
        if nl.picard_max == 0 {
            return Err(bad("nonlinear.picard_max", "must be at least 1"));
        }
        let th = finite("nonlinear.lipschitz_threshold", nl.lipschitz_threshold)?;
        if !(th > 0.0 && th < 1.0) {
            return Err(bad("nonlinear.lipschitz_threshold", "must lie in (0, 1)"));
        }
        if nl.snapshot_times.iter().any(|&t| !(t >= 0.0 && t <= s.t_end)) {
            return Err(bad("nonlinear.snapshot_times", "must lie in [0, solver.t_end]"));
        }
        if self.output.dir.is_empty() {
            return Err(bad("output.dir", "must not be empty"));
        }
        Ok(())
    }

    /// The configured grid.
    pub fn log_grid(&self) -> Result<LogGrid, CliError> {
        Ok(LogGrid::new(self.grid.s_min, self.grid.s_max, self.grid.n)?)
    }

    /// Linear evolution parameters.
    pub fn evolution(&self) -> EvolutionConfig {
        EvolutionConfig {
            dt: self.solver.dt,
            t_end: self.solver.t_end,
            alpha: self.solver.alpha,
            k: self.solver.k,
        }
    }

    /// Composite norm parameters.
    pub fn composite(&self) -> CompositeParams {
        CompositeParams {
            n: self.norms.n,
            k: self.norms.k,
            delta: self.norms.delta,
        }
    }

    /// Nonlinear run parameters.
    pub fn nonlinear_config(&self) -> NonlinearConfig {
        NonlinearConfig {
            evolution: self.evolution(),
            picard_tol: self.nonlinear.picard_tol,
            picard_max: self.nonlinear.picard_max,
            lipschitz_threshold: self.nonlinear.lipschitz_threshold,
            norm: self.composite(),
        }
    }

    /// `ε(3x² + 2x)e^{-taper·x}` on `grid`.
    pub fn perturbation(&self, grid: &LogGrid) -> tfstab::GridFunction {
        let (eps, taper) = (self.nonlinear.epsilon, self.nonlinear.taper);
        grid.sample(|x| eps * x * (3.0 * x + 2.0) * (-taper * x).exp())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ExperimentConfig::default().validate().unwrap();
        assert_eq!(ExperimentConfig::from_toml("").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn unknown_key_is_named() {
        let e = ExperimentConfig::from_toml("[grid]\nnodes = 5\n").unwrap_err();
        assert!(e.to_string().contains("nodes"), "{e}");
        assert_eq!(e.exit_code(), 1);
    }

    #[test]
    fn invalid_value_is_named() {
        let e = ExperimentConfig::from_toml("[grid]\nn = 10\n").unwrap_err();
        assert!(e.to_string().contains("grid.n"), "{e}");
        let e = ExperimentConfig::from_toml("[norms]\ndelta = 0.7\n").unwrap_err();
        assert!(e.to_string().contains("norms.delta"), "{e}");
    }

    #[test]
    fn round_trips_through_toml() {
        let mut c = ExperimentConfig::default();
        c.solver.lambdas = vec![0.5, 2.0];
        c.nonlinear.snapshot_times = vec![0.0, 1.0];
        let text = toml::to_string(&c).unwrap();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), c);
    }
}
