//! The nonlinearity `𝒩(u)` of the von Mises formulation, the Lipschitz guard,
//! semi-implicit Picard time stepping, film reconstruction and the `(V, ν)`
//! rescaling.

use crate::error::{Error, Result};
use crate::evolution::{EvolutionConfig, EvolutionState};
use crate::grid::{
    composite_init, contact_line_coefficients, d_derivative, fit_power_series, CompositeParams,
    GridFunction, NEAR_FIELD_X,
};
use crate::resolvent::{DiscreteOperator, ResolventSolver};
use serde::{Deserialize, Serialize};

/// Default bound on `sup |v_x|`.
pub const DEFAULT_LIPSCHITZ_THRESHOLD: f64 = 0.5;
/// Default Picard tolerance on the sup norm of successive iterates.
pub const DEFAULT_PICARD_TOL: f64 = 1e-10;
/// Default Picard sweep limit.
pub const DEFAULT_PICARD_MAX: usize = 25;
/// Terms of the near-field power series of `u`.
const SERIES_TERMS: usize = 6;

/// `3x² + 2x`.
fn weight(x: f64) -> f64 {
    x * (3.0 * x + 2.0)
}

/// `v` and its first three `x`-derivatives on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VonMisesFields {
    pub v: GridFunction,
    pub vx: GridFunction,
    pub vxx: GridFunction,
    pub vxxx: GridFunction,
}

/// `v = a(x)/(2 + 3x)` and derivatives up to order 3 for `a = Σ c_i x^{i-1}`.
fn series_derivatives(c: &[f64], x: f64) -> [f64; 4] {
    let mut a = [0.0; 4];
    for (i, ci) in c.iter().enumerate() {
        // d^m/dx^m of x^i
        let mut coeff = *ci;
        for (m, am) in a.iter_mut().enumerate() {
            if m > i {
                break;
            }
            *am += coeff * x.powi((i - m) as i32);
            coeff *= (i - m) as f64;
        }
    }
    let d = 2.0 + 3.0 * x;
    let mut r = [0.0; 4];
    let mut fact = 1.0;
    for (k, rk) in r.iter_mut().enumerate() {
        *rk = (-3.0f64).powi(k as i32) * fact / d.powi(k as i32 + 1);
        fact *= (k + 1) as f64;
    }
    let binom = [[1.0, 0.0, 0.0, 0.0], [1.0, 1.0, 0.0, 0.0], [1.0, 2.0, 1.0, 0.0], [1.0, 3.0, 3.0, 1.0]];
    let mut out = [0.0; 4];
    for (m, o) in out.iter_mut().enumerate() {
        for k in 0..=m {
            *o += binom[m][k] * a[m - k] * r[k];
        }
    }
    out
}

/// `v = u/(3x² + 2x)` with derivatives. For `x < NEAR_FIELD_X` the values come
/// from a fitted power series of `u`, elsewhere from stencils in `s`.
pub fn von_mises_fields(u: &GridFunction) -> Result<VonMisesFields> {
    let g = u.grid;
    let split = g.last_index_below(NEAR_FIELD_X.ln()).map_or(0, |i| i + 1);
    let c = if split > 0 {
        fit_power_series(u, NEAR_FIELD_X.ln(), SERIES_TERMS)?
    } else {
        Vec::new()
    };
    let near: Vec<[f64; 4]> = (0..split).map(|i| series_derivatives(&c, g.x(i))).collect();
    let mut v = u.map_x(|x, val| val / weight(x));
    for (i, nd) in near.iter().enumerate() {
        v.values[i] = nd[0];
    }
    let d1 = d_derivative(&v, 1)?;
    let d2 = d_derivative(&v, 2)?;
    let d3 = d_derivative(&v, 3)?;
    let mut vx = g.zeros();
    let mut vxx = g.zeros();
    let mut vxxx = g.zeros();
    for i in 0..g.n {
        if i < split {
            vx.values[i] = near[i][1];
            vxx.values[i] = near[i][2];
            vxxx.values[i] = near[i][3];
        } else {
            let x = g.x(i);
            let (a, b, e) = (d1.values[i], d2.values[i], d3.values[i]);
            vx.values[i] = a / x;
            vxx.values[i] = (b - a) / (x * x);
            vxxx.values[i] = (e - 3.0 * b + 2.0 * a) / (x * x * x);
        }
    }
    Ok(VonMisesFields { v, vx, vxx, vxxx })
}

/// `v = u/(3x² + 2x)`, with `v(0⁺) = u₁/2` built into the near-field series.
pub fn to_v(u: &GridFunction) -> Result<GridFunction> {
    Ok(von_mises_fields(u)?.v)
}

/// `sup |v_x|` against a threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzReport {
    pub sup_vx: f64,
    pub threshold: f64,
    pub ok: bool,
}

impl LipschitzReport {
    fn new(sup_vx: f64, threshold: f64) -> Self {
        Self {
            sup_vx,
            threshold,
            ok: sup_vx < threshold,
        }
    }

    /// `Err(LipschitzGuard)` unless the guard holds.
    pub fn check(self) -> Result<Self> {
        if self.ok {
            Ok(self)
        } else {
            Err(Error::LipschitzGuard {
                sup: self.sup_vx,
                threshold: self.threshold,
            })
        }
    }
}

/// `sup |v_x| = sup |e^{-s} ∂ₛ v|` over the grid.
pub fn lipschitz_guard(v: &GridFunction, threshold: f64) -> Result<LipschitzReport> {
    let d = d_derivative(v, 1)?;
    let sup = d
        .map_x(|x, dv| (dv / x).abs())
        .values
        .into_iter()
        .fold(0.0, f64::max);
    Ok(LipschitzReport::new(sup, threshold))
}

/// Bracket of `𝒩 = ∂x (x³+x²) C` written so that every term is at least
/// quadratic in `w = v_x`:
/// `C = 3a⁵P w'² + a⁴(4w + 6w² + 4w³ + w⁴)(P w'' + 3P' w') + 6a³w²(6 + 8w + 3w²)`
/// with `a = 1/(1+w)` and `P = 3x² + 2x`.
fn bracket(x: f64, w: f64, w1: f64, w2: f64) -> f64 {
    let a = 1.0 / (1.0 + w);
    let p = weight(x);
    let dp = 6.0 * x + 2.0;
    let a3 = a * a * a;
    let a4 = a3 * a;
    3.0 * a4 * a * p * w1 * w1
        + a4 * w * (4.0 + w * (6.0 + w * (4.0 + w))) * (p * w2 + 3.0 * dp * w1)
        + 6.0 * a3 * w * w * (6.0 + w * (8.0 + 3.0 * w))
}

/// `𝒩(u)`; fails if `sup |v_x| >= threshold`.
pub fn eval_n(u: &GridFunction, threshold: f64) -> Result<GridFunction> {
    let f = von_mises_fields(u)?;
    LipschitzReport::new(f.vx.values.iter().fold(0.0, |m, v| v.abs().max(m)), threshold).check()?;
    let g = u.grid;
    let hc = GridFunction {
        grid: g,
        values: (0..g.n)
            .map(|i| {
                let x = g.x(i);
                x * x * (x + 1.0) * bracket(x, f.vx.values[i], f.vxx.values[i], f.vxxx.values[i])
            })
            .collect(),
    };
    Ok(d_derivative(&hc, 1)?.map_x(|x, d| d / x))
}

/// Parameters of a nonlinear run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonlinearConfig {
    pub evolution: EvolutionConfig,
    pub picard_tol: f64,
    pub picard_max: usize,
    pub lipschitz_threshold: f64,
    /// Parameters of the monitored composite initial-data norm.
    pub norm: CompositeParams,
}

impl Default for NonlinearConfig {
    fn default() -> Self {
        Self {
            evolution: EvolutionConfig {
                dt: 1e-2,
                t_end: 5.0,
                ..EvolutionConfig::default()
            },
            picard_tol: DEFAULT_PICARD_TOL,
            picard_max: DEFAULT_PICARD_MAX,
            lipschitz_threshold: DEFAULT_LIPSCHITZ_THRESHOLD,
            norm: CompositeParams {
                n: 1,
                k: 3,
                delta: 0.25,
            },
        }
    }
}

/// Nonlinear trajectory plus the composite initial-data norm per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonlinearRun {
    pub state: EvolutionState,
    pub init_norm: Vec<f64>,
}

/// One step `u = (I + δt𝒜_h)⁻¹(uⁿ + δt 𝒩(u))` by Picard iteration.
/// Returns the new state and the number of sweeps.
pub fn picard_step(
    solver: &ResolventSolver,
    un: &GridFunction,
    cfg: &NonlinearConfig,
    t: f64,
) -> Result<(GridFunction, usize)> {
    let lambda = solver.lambda();
    let base = un.scale(lambda);
    let mut uk = un.clone();
    let mut last = f64::INFINITY;
    for it in 1..=cfg.picard_max {
        let nk = eval_n(&uk, cfg.lipschitz_threshold)?;
        let next = solver.solve_raw(&base.add(&nk)?)?;
        last = next.sub(&uk)?.max_abs();
        uk = next;
        if last < cfg.picard_tol {
            return Ok((uk, it));
        }
    }
    Err(Error::PicardDivergence {
        iterations: cfg.picard_max,
        last_update: last,
        t,
    })
}

/// Semi-implicit nonlinear evolution from `u0`.
pub fn run_nonlinear(op: &DiscreteOperator, u0: &GridFunction, cfg: &NonlinearConfig) -> Result<NonlinearRun> {
    let steps = cfg.evolution.steps()?;
    if u0.grid != op.grid {
        return Err(Error::GridMismatch);
    }
    let v0 = to_v(u0)?;
    lipschitz_guard(&v0, cfg.lipschitz_threshold)?.check()?;
    let solver = op.resolvent(1.0 / cfg.evolution.dt)?;
    let mut state = EvolutionState::new(cfg.evolution, cfg.evolution.monitors());
    let mut init_norm = Vec::with_capacity(steps + 1);
    let mut push = |state: &mut EvolutionState, t: f64, u: &GridFunction, it: usize| -> Result<()> {
        let f = von_mises_fields(u)?;
        state.record(t, u.clone())?;
        let c = *state.coefficient_tracks.last().expect("just recorded");
        state.picard_iterations.push(it);
        state.lipschitz.push(f.vx.values.iter().fold(0.0, |m, v| v.abs().max(m)));
        state.contact_line.push(6.0 * t + 0.5 * c[0]);
        init_norm.push(composite_init(u, cfg.norm)?.value);
        Ok(())
    };
    push(&mut state, 0.0, u0, 0)?;
    let mut u = u0.clone();
    for j in 1..=steps {
        let t = j as f64 * cfg.evolution.dt;
        let (next, it) = picard_step(&solver, &u, cfg, t)?;
        u = next;
        push(&mut state, t, &u, it)?;
    }
    Ok(NonlinearRun { state, init_norm })
}

/// Physical film `h(y)` recovered from `u` at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilmReconstruction {
    pub t: f64,
    pub samples: Vec<(f64, f64)>,
    pub contact_line: f64,
    pub coefficients: (f64, f64),
}

impl FilmReconstruction {
    /// Leading coefficients `(a₁, a₂)` of `h ≈ a₁ȳ + a₂ȳ² + a₃ȳ³`, `ȳ = y - Y₀`,
    /// fitted on samples with `0 < ȳ <= band`.
    pub fn contact_fit(&self, band: f64) -> Result<(f64, f64)> {
        let pts: Vec<(f64, f64)> = self
            .samples
            .iter()
            .map(|&(y, h)| (y - self.contact_line, h))
            .filter(|&(d, _)| d > 0.0 && d <= band)
            .collect();
        if pts.len() < 5 {
            return Err(Error::SingularFit);
        }
        let a = nalgebra::DMatrix::from_fn(pts.len(), 3, |r, c| (pts[r].0 / band).powi(c as i32 + 1));
        let b = nalgebra::DVector::from_iterator(pts.len(), pts.iter().map(|p| p.1));
        let sol = a.svd(true, true).solve(&b, 0.0).map_err(|_| Error::SingularFit)?;
        Ok((sol[0] / band, sol[1] / (band * band)))
    }
}

/// Two-term expansion of `h` near the contact line in terms of `(u₁, u₂, u₃)`.
///
/// With `A = 1 + u₂/2 - 3u₁/4` and `ȳ = y - 6t - u₁/2`:
/// `h ≈ (ȳ/A)² + (1 - u₃ + 2u₂ - 3u₁)/A · (ȳ/A)³`.
pub fn contact_expansion(c: [f64; 3], t: f64, y: f64) -> f64 {
    let a = 1.0 + 0.5 * c[1] - 0.75 * c[0];
    let yb = (y - 6.0 * t - 0.5 * c[0]) / a;
    if yb <= 0.0 {
        return 0.0;
    }
    yb * yb + (1.0 - c[2] + 2.0 * c[1] - 3.0 * c[0]) / a * yb * yb * yb
}

/// Fritsch-Carlson monotone cubic interpolant through `(xs, ys)`.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ms: Vec<f64>,
}

impl MonotoneCubic {
    /// Builds the interpolant; `xs` must be strictly increasing.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let n = xs.len();
        if n < 2 || ys.len() != n {
            return Err(Error::InvalidParameter {
                name: "samples",
                reason: "need at least two matching samples".into(),
            });
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::NonMonotone);
        }
        let d: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])).collect();
        let mut ms = vec![0.0; n];
        ms[0] = d[0];
        ms[n - 1] = d[n - 2];
        for i in 1..n - 1 {
            ms[i] = if d[i - 1] * d[i] <= 0.0 { 0.0 } else { 0.5 * (d[i - 1] + d[i]) };
        }
        for i in 0..n - 1 {
            if d[i] == 0.0 {
                ms[i] = 0.0;
                ms[i + 1] = 0.0;
                continue;
            }
            let (a, b) = (ms[i] / d[i], ms[i + 1] / d[i]);
            let r = a * a + b * b;
            if r > 9.0 {
                let tau = 3.0 / r.sqrt();
                ms[i] = tau * a * d[i];
                ms[i + 1] = tau * b * d[i];
            }
        }
        Ok(Self { xs, ys, ms })
    }

    /// Value at `x`, clamped to the end values outside the sample range.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let i = self.xs.partition_point(|&v| v <= x) - 1;
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.ys[i]
            + (t3 - 2.0 * t2 + t) * h * self.ms[i]
            + (-2.0 * t3 + 3.0 * t2) * self.ys[i + 1]
            + (t3 - t2) * h * self.ms[i + 1]
    }
}

/// Film `h(t, y)` from `u(t, ·)`: the pairs `(Y, x³ + x²)` with
/// `Y = x + 6t + v` are interpolated onto `y_grid`; `h = 0` left of `Y₀`.
pub fn reconstruct(u: &GridFunction, t: f64, y_grid: &[f64]) -> Result<FilmReconstruction> {
    let g = u.grid;
    let v = to_v(u)?;
    let c = if u.max_abs() == 0.0 {
        [0.0; 3]
    } else {
        contact_line_coefficients(u)?
    };
    let y0 = 6.0 * t + 0.5 * c[0];
    let mut ys = vec![y0];
    let mut hs = vec![0.0];
    for i in 0..g.n {
        let x = g.x(i);
        ys.push(x + 6.0 * t + v.values[i]);
        hs.push(x * x * (x + 1.0));
    }
    let y_max = *ys.last().expect("non-empty");
    let interp = MonotoneCubic::new(ys, hs)?;
    let mut samples = Vec::with_capacity(y_grid.len());
    for &y in y_grid {
        if y > y_max {
            return Err(Error::InvalidParameter {
                name: "y_grid",
                reason: format!("y = {y} beyond reconstructed range {y_max}"),
            });
        }
        samples.push((y, if y <= y0 { 0.0 } else { interp.eval(y) }));
    }
    Ok(FilmReconstruction {
        t,
        samples,
        contact_line: y0,
        coefficients: (c[0], c[1]),
    })
}

/// Smooth pointwise evaluation of `h(t, y)` from `u(t, ·)` by solving
/// `x + v(x) = y - 6t` with local six-point interpolation of `v` in `s`.
#[derive(Debug, Clone)]
pub struct FilmSampler {
    v: GridFunction,
    t: f64,
    contact_line: f64,
}

impl FilmSampler {
    /// Prepares the sampler for `u` at time `t`.
    pub fn new(u: &GridFunction, t: f64) -> Result<Self> {
        let v = to_v(u)?;
        let v0 = if u.max_abs() == 0.0 {
            0.0
        } else {
            0.5 * contact_line_coefficients(u)?[0]
        };
        Ok(Self {
            v,
            t,
            contact_line: 6.0 * t + v0,
        })
    }

    /// Contact line `Y₀ = 6t + u₁/2`.
    pub fn contact_line(&self) -> f64 {
        self.contact_line
    }

    fn v_at(&self, x: f64) -> f64 {
        let g = self.v.grid;
        let s = x.ln().clamp(g.s_min, g.s_max);
        let pos = (s - g.s_min) / g.h();
        let i0 = (pos.floor() as isize - 2).clamp(0, g.n as isize - 6) as usize;
        let mut acc = 0.0;
        for j in 0..6 {
            let mut l = 1.0;
            for k in 0..6 {
                if k != j {
                    l *= (pos - (i0 + k) as f64) / (j as f64 - k as f64);
                }
            }
            acc += l * self.v.values[i0 + j];
        }
        acc
    }

    /// `h(t, y)`; zero left of the contact line.
    pub fn height(&self, y: f64) -> Result<f64> {
        if y <= self.contact_line {
            return Ok(0.0);
        }
        let target = y - 6.0 * self.t;
        let x_max = self.v.grid.x(self.v.grid.n - 1);
        let mut x = (target - self.contact_line + 6.0 * self.t).max(f64::MIN_POSITIVE);
        for _ in 0..200 {
            let next = (target - self.v_at(x)).max(f64::MIN_POSITIVE);
            if next > x_max {
                return Err(Error::InvalidParameter {
                    name: "y",
                    reason: format!("y = {y} beyond the grid"),
                });
            }
            let done = (next - x).abs() <= 1e-15 * next;
            x = next;
            if done {
                return Ok(x * x * (x + 1.0));
            }
        }
        Err(Error::NonFinite {
            context: "film inversion did not converge".into(),
        })
    }
}

/// Direction of [`rescale`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RescaleDirection {
    /// Physical `(V, ν)` variables to the normalized `V = 6, ν = 1` frame.
    ToNormalized,
    /// Normalized frame back to physical variables.
    FromNormalized,
}

/// Quantities transformed by [`rescale`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledState {
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub h: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

/// Applies the scalings `h = 36ν³/V² h̆`, `t = 36ν/V² t̆`, `x, y, v = 6ν/V (·)̆`
/// and `u = 36ν³/V² ŭ`.
pub fn rescale(velocity: f64, nu: f64, dir: RescaleDirection, state: &ScaledState) -> Result<ScaledState> {
    if !(velocity > 0.0) || !(nu > 0.0) || !velocity.is_finite() || !nu.is_finite() {
        return Err(Error::InvalidParameter {
            name: "V, nu",
            reason: format!("must be positive, got V = {velocity}, nu = {nu}"),
        });
    }
    let sh = 36.0 * nu.powi(3) / (velocity * velocity);
    let st = 36.0 * nu / (velocity * velocity);
    let sx = 6.0 * nu / velocity;
    let (fh, ft, fx) = match dir {
        RescaleDirection::ToNormalized => (1.0 / sh, 1.0 / st, 1.0 / sx),
        RescaleDirection::FromNormalized => (sh, st, sx),
    };
    let m = |v: &[f64], f: f64| v.iter().map(|a| a * f).collect::<Vec<_>>();
    Ok(ScaledState {
        t: state.t * ft,
        x: m(&state.x, fx),
        y: m(&state.y, fx),
        h: m(&state.h, fh),
        u: m(&state.u, fh),
        v: m(&state.v, fx),
    })
}
