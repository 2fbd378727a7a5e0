//! Residual oracles on the physical equation `h_t + (h h_yyy)_y = 0` and its
//! exact special solutions.

use crate::error::{Error, Result};
use crate::nonlinear::{FilmSampler, NonlinearRun};
use serde::{Deserialize, Serialize};

/// Stencil points in `t` (centered, fourth order).
pub const T_POINTS: usize = 5;
/// Stencil points in `y` (flux difference of third derivatives).
pub const Y_POINTS: usize = 7;
/// Relative floor below which a stencil counts as touching `{h = 0}`.
pub const H_FLOOR: f64 = 1e-6;
/// Minimum refinement order for a pass.
pub const MIN_ORDER: f64 = 1.8;
/// Multiple of the rounding estimate under which a residual counts as exact.
const ROUNDING_FACTOR: f64 = 100.0;

/// Residual of the thin-film equation over a set of stencil centers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub max_residual: f64,
    pub l2_residual: f64,
    /// Spacing `Δy` of the stencil.
    pub spacing: f64,
    /// Spacing `Δt` of the stencil.
    pub dt: f64,
    /// Rounding-level bound for this stencil and sample scale.
    pub rounding_floor: f64,
}

/// Residual at one center from `T_POINTS × Y_POINTS` samples
/// `samples[a][b] = h(t + (a-2)Δt, y + (b-3)Δy)`.
fn stencil_residual(samples: &[[f64; Y_POINTS]; T_POINTS], dt: f64, dy: f64) -> f64 {
    let mid = &samples[2];
    let h_t = (samples[0][3] - 8.0 * samples[1][3] + 8.0 * samples[3][3] - samples[4][3]) / (12.0 * dt);
    let hyyy = |c: usize| (mid[c + 2] - 2.0 * mid[c + 1] + 2.0 * mid[c - 1] - mid[c - 2]) / (2.0 * dy.powi(3));
    let flux = |c: usize| mid[c] * hyyy(c);
    h_t + (flux(4) - flux(2)) / (2.0 * dy)
}

/// Centered finite-difference residual of `h_t + (h h_yyy)_y` at each center.
/// Fails with `DegenerateStencil` if any sample lies below
/// `H_FLOOR · max h` over all samples.
pub fn tfe_residual(
    h: &dyn Fn(f64, f64) -> Result<f64>,
    centers: &[(f64, f64)],
    dt: f64,
    dy: f64,
) -> Result<ResidualReport> {
    if centers.is_empty() || !(dt > 0.0) || !(dy > 0.0) {
        return Err(Error::InvalidParameter {
            name: "stencil",
            reason: "need centers and positive spacings".into(),
        });
    }
    let mut all = Vec::with_capacity(centers.len());
    for &(t, y) in centers {
        let mut s = [[0.0; Y_POINTS]; T_POINTS];
        for (a, row) in s.iter_mut().enumerate() {
            for (b, val) in row.iter_mut().enumerate() {
                *val = h(t + (a as f64 - 2.0) * dt, y + (b as f64 - 3.0) * dy)?;
                if !val.is_finite() {
                    return Err(Error::NonFinite {
                        context: "tfe_residual sample",
                    });
                }
            }
        }
        all.push(s);
    }
    let scale = all
        .iter()
        .flat_map(|s| s.iter().flatten())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = H_FLOOR * scale;
    let mut max_r = 0.0f64;
    let mut sum = 0.0;
    for (s, &(t, y)) in all.iter().zip(centers) {
        if s.iter().flatten().any(|&v| v <= floor) {
            return Err(Error::DegenerateStencil { t, y });
        }
        let r = stencil_residual(s, dt, dy).abs();
        max_r = max_r.max(r);
        sum += r * r;
    }
    let eps = f64::EPSILON;
    Ok(ResidualReport {
        max_residual: max_r,
        l2_residual: (sum / centers.len() as f64).sqrt(),
        spacing: dy,
        dt,
        rounding_floor: ROUNDING_FACTOR * eps * (scale * scale / dy.powi(4) + scale / dt),
    })
}

/// Residuals under successive refinement of the stencil.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementStudy {
    pub name: String,
    pub reports: Vec<ResidualReport>,
    /// Orders between consecutive levels from the maximum residual.
    pub orders: Vec<f64>,
    /// All residuals at rounding level.
    pub exact: bool,
}

impl RefinementStudy {
    /// Smallest observed order, if any level is above rounding.
    pub fn min_order(&self) -> Option<f64> {
        if self.exact {
            None
        } else {
            self.orders.iter().copied().reduce(f64::min)
        }
    }

    /// Exact to rounding, or converging at order at least `MIN_ORDER`.
    pub fn passes(&self) -> bool {
        self.exact || self.min_order().is_some_and(|o| o >= MIN_ORDER)
    }
}

/// Residuals at spacings `(Δt, Δy) = (ratio·d, d)` for each `d` in `spacings`.
pub fn refinement_study(
    name: &str,
    h: &dyn Fn(f64, f64) -> Result<f64>,
    centers: &[(f64, f64)],
    spacings: &[f64],
    ratio: f64,
) -> Result<RefinementStudy> {
    if spacings.len() < 2 {
        return Err(Error::InvalidParameter {
            name: "spacings",
            reason: "need at least two levels".into(),
        });
    }
    let reports = spacings
        .iter()
        .map(|&d| tfe_residual(h, centers, ratio * d, d))
        .collect::<Result<Vec<_>>>()?;
    let orders = reports
        .windows(2)
        .map(|w| (w[0].max_residual / w[1].max_residual).ln() / (w[0].spacing / w[1].spacing).ln())
        .collect();
    let exact = reports.iter().all(|r| r.max_residual <= r.rounding_floor);
    Ok(RefinementStudy {
        name: name.to_string(),
        reports,
        orders,
        exact,
    })
}

/// Traveling wave `h = H(y - 6t)`, `H = x³ + x²`.
pub fn traveling_wave(t: f64, y: f64) -> f64 {
    let x = (y - 6.0 * t).max(0.0);
    x * x * (x + 1.0)
}

/// Equilibrium `h = y²` for `y >= 0`.
pub fn equilibrium(_t: f64, y: f64) -> f64 {
    let y = y.max(0.0);
    y * y
}

/// Source-type solution `h = (t+1)^{-1/5} (x² - 1)²/120`, `x = (t+1)^{-1/5} y`, `|x| < 1`.
pub fn smyth_hill(t: f64, y: f64) -> f64 {
    let a = (t + 1.0).powf(-0.2);
    let x = a * y;
    if x.abs() >= 1.0 {
        0.0
    } else {
        a * (x * x - 1.0).powi(2) / 120.0
    }
}

/// Refinement spacings used by the special-solution suite.
pub const SPECIAL_SPACINGS: [f64; 3] = [0.04, 0.02, 0.01];

/// Residual studies for the three exact solutions.
pub fn special_solution_suite() -> Result<Vec<RefinementStudy>> {
    let ok = |f: fn(f64, f64) -> f64| move |t: f64, y: f64| -> Result<f64> { Ok(f(t, y)) };
    let tw_centers = [(0.5, 4.5), (0.5, 5.5), (1.0, 7.5), (1.0, 9.0)];
    let eq_centers = [(0.0, 0.5), (0.3, 1.0), (1.0, 2.0)];
    let sh_centers = [(0.0, 0.0), (0.5, 0.3), (0.5, -0.5), (1.0, 0.6)];
    Ok(vec![
        refinement_study("traveling_wave", &ok(traveling_wave), &tw_centers, &SPECIAL_SPACINGS, 1.0)?,
        refinement_study("equilibrium", &ok(equilibrium), &eq_centers, &SPECIAL_SPACINGS, 1.0)?,
        refinement_study("smyth_hill", &ok(smyth_hill), &sh_centers, &SPECIAL_SPACINGS, 1.0)?,
    ])
}

/// Checks of `H = (V/6)x³ + νx²` against `H''' = V`, `H(0) = H'(0) = 0`,
/// and the contact-line speed `h_yyy(Y₀) = V` from a one-sided stencil.
pub fn tw_ode_check(velocity: f64, nu: f64, x_samples: &[f64]) -> Result<f64> {
    if x_samples.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::InvalidParameter {
            name: "x_samples",
            reason: "must be positive".into(),
        });
    }
    let hh = |x: f64| velocity / 6.0 * x * x * x + nu * x * x;
    // The stencils below are exact on cubics; the spacing only sets rounding.
    let d = 0.5;
    let mut err = hh(0.0).abs();
    // H'(0) from a one-sided stencil exact for cubics.
    let dh0 = (-11.0 * hh(0.0) + 18.0 * hh(d) - 9.0 * hh(2.0 * d) + 2.0 * hh(3.0 * d)) / (6.0 * d);
    err = err.max(dh0.abs());
    for &x in x_samples {
        let s = 0.25 * (1.0 + x);
        let h3 = (hh(x + 2.0 * s) - 2.0 * hh(x + s) + 2.0 * hh(x - s) - hh(x - 2.0 * s)) / (2.0 * s.powi(3));
        err = err.max((h3 - velocity).abs() / velocity.max(1.0));
    }
    let h3_0 = (hh(3.0 * d) - 3.0 * hh(2.0 * d) + 3.0 * hh(d) - hh(0.0)) / d.powi(3);
    Ok(err.max((h3_0 - velocity).abs() / velocity.max(1.0)))
}

/// Residual of the reconstructed film around step `step` of a nonlinear run.
/// The stencil uses `Δt = stride·δt` and `Δy = Δt`; centers sit at
/// `y = 6t + offset`.
pub fn film_residual(run: &NonlinearRun, step: usize, stride: usize, offsets: &[f64]) -> Result<ResidualReport> {
    let st = &run.state;
    let dt = st.config.dt;
    if stride == 0 || step < 2 * stride || step + 2 * stride >= st.states.len() {
        return Err(Error::TrajectoryTooShort {
            need: step + 2 * stride + 1,
            have: st.states.len(),
        });
    }
    let samplers = (0..T_POINTS)
        .map(|a| {
            let j = step + a * stride - 2 * stride;
            FilmSampler::new(&st.states[j], st.times[j])
        })
        .collect::<Result<Vec<_>>>()?;
    let t0 = st.times[step];
    let d = stride as f64 * dt;
    let h = |t: f64, y: f64| -> Result<f64> {
        let a = ((t - t0) / d).round() as isize + 2;
        samplers[a as usize].height(y)
    };
    let centers: Vec<(f64, f64)> = offsets.iter().map(|o| (t0, 6.0 * t0 + o)).collect();
    tfe_residual(&h, &centers, d, d)
}

/// Film residual for strides `strides` (coarse to fine).
pub fn film_refinement(run: &NonlinearRun, step: usize, strides: &[usize], offsets: &[f64]) -> Result<RefinementStudy> {
    let reports = strides
        .iter()
        .map(|&k| film_residual(run, step, k, offsets))
        .collect::<Result<Vec<_>>>()?;
    let orders = reports
        .windows(2)
        .map(|w| (w[0].max_residual / w[1].max_residual).ln() / (w[0].spacing / w[1].spacing).ln())
        .collect();
    let exact = reports.iter().all(|r| r.max_residual <= r.rounding_floor);
    Ok(RefinementStudy {
        name: "reconstructed_film".into(),
        reports,
        orders,
        exact,
    })
}
