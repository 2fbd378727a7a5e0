//! Error type shared by all numerical modules.

use thiserror::Error;

/// Failures raised by the grid, solver and evolution routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid too small: need at least {need} nodes, have {have}")]
    GridTooSmall { need: usize, have: usize },

    #[error("grid functions live on different grids")]
    GridMismatch,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite value encountered in {context}")]
    NonFinite { context: &'static str },

    #[error("decay probe failed near the contact line: fitted exponent {gamma:.4} is not positive")]
    DecayProbe { gamma: f64 },

    #[error("support of the test function touches the grid boundary")]
    SupportTouchesBoundary,

    #[error("singular pivot in banded factorization at row {0}")]
    Singular(usize),

    #[error("least-squares fit is rank deficient")]
    SingularFit,

    #[error("Lipschitz guard violated: sup |v_x| = {sup:.4e} >= {threshold}")]
    LipschitzGuard { sup: f64, threshold: f64 },

    #[error("Picard iteration did not converge after {iterations} sweeps at t = {t}: last update {last_update:.3e}")]
    PicardDivergence {
        iterations: usize,
        last_update: f64,
        t: f64,
    },

    #[error("von Mises coordinate is not monotone")]
    NonMonotone,

    #[error("tail shows no decay")]
    NoDecay,

    #[error("residual stencil at (t, y) = ({t}, {y}) touches the degenerate set h = 0")]
    DegenerateStencil { t: f64, y: f64 },

    #[error("composite norms support N <= 2, got N = {0}")]
    UnsupportedOrder(usize),

    #[error("trajectory has {have} steps, need at least {need}")]
    TrajectoryTooShort { need: usize, have: usize },
}

/// Result alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;
