//! Numerical laboratory for the linear and nonlinear stability of the
//! receding traveling wave `H = x³ + x²` of the thin-film equation in von
//! Mises coordinates.
//!
//! Spatial fields live on uniform grids in `s = ln x`, where the
//! scaling-invariant derivative `D = x∂x` becomes `∂ₛ`.

pub mod banded;
pub mod coercivity;
pub mod elliptic;
pub mod error;
pub mod evolution;
pub mod grid;
pub mod nonlinear;
pub mod polyops;
pub mod resolvent;
pub mod validation;

pub use error::{Error, Result};
pub use grid::{GridFunction, LogGrid, NormSpec};
pub use polyops::{CoefficientVector, Composite, PolynomialOperator};
