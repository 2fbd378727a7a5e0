//! Power-series fits near the contact line, decay probes and cumulative quadrature.

use super::{d_derivative, GridFunction};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Default fit band above `s_min` used by [`extract_coefficients`].
pub const FIT_BAND: f64 = 2.0;

/// Upper end (in `x`) of the near-field band used for wide expansion fits.
pub const NEAR_FIELD_X: f64 = 0.05;

fn lstsq(a: DMatrix<f64>, b: DVector<f64>) -> Result<DVector<f64>> {
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smax > 0.0) || smin <= 1e-13 * smax {
        return Err(Error::SingularFit);
    }
    svd.solve(&b, 0.0).map_err(|_| Error::SingularFit)
}

/// Weighted least-squares fit `w ≈ Σ_{i=1..terms} c_i x^i` on nodes with `s <= s_hi`.
///
/// Residuals are weighted by `1/x` (weight `e^{-2s}` on squares).
pub fn fit_power_series(w: &GridFunction, s_hi: f64, terms: usize) -> Result<Vec<f64>> {
    if terms == 0 {
        return Ok(Vec::new());
    }
    let g = w.grid;
    let last = g.last_index_below(s_hi).ok_or(Error::SingularFit)?;
    let rows = last + 1;
    if rows < terms + 2 {
        return Err(Error::SingularFit);
    }
    if w.values[..rows].iter().all(|v| *v == 0.0) {
        return Ok(vec![0.0; terms]);
    }
    let xb = g.x(last);
    let mut a = DMatrix::zeros(rows, terms);
    let mut b = DVector::zeros(rows);
    for r in 0..rows {
        let x = g.x(r);
        let t = x / xb;
        let mut p = 1.0;
        for i in 0..terms {
            a[(r, i)] = p;
            p *= t;
        }
        b[r] = w.values[r] / x;
    }
    let sol = lstsq(a, b)?;
    Ok((0..terms).map(|i| sol[i] / xb.powi(i as i32)).collect())
}

/// Band `[lo, hi]` in `x` used by [`contact_line_coefficients`].
pub const ANNIHILATOR_BAND: (f64, f64) = (5e-3, 0.2);
/// Polynomial terms fitted by [`contact_line_coefficients`].
const ANNIHILATOR_TERMS: usize = 6;

/// `(u_1, u_2, u_3)` of `w` at `x = 0`, each read off after applying the
/// factors of `(D-1)(D-2)(D-3)` that annihilate the other two powers.
///
/// `(D-2)(D-3)w/(2x)`, `(D-1)(D-3)w/(-x²)` and `(D-1)(D-2)w/(2x³)` are fitted
/// on [`ANNIHILATOR_BAND`] by polynomials in `x` plus the images of the
/// rejected modes `1` and (for `u_2`, `u_3`) `x ln x`; the polynomial
/// intercepts are returned.
pub fn contact_line_coefficients(w: &GridFunction) -> Result<[f64; 3]> {
    let g = w.grid;
    let (xl, xh) = ANNIHILATOR_BAND;
    let rows: Vec<usize> = (0..g.n).filter(|&i| (xl..=xh).contains(&g.x(i))).collect();
    if rows.len() < ANNIHILATOR_TERMS + 2 {
        return Err(Error::SingularFit);
    }
    let d1 = d_derivative(w, 1)?.values;
    let d2 = d_derivative(w, 2)?.values;
    // (D-a)(D-b) = D² - (a+b)D + ab, with the value of (j-a)(j-b) and power j.
    let cases = [(2.0, 3.0, 2.0, 1), (1.0, 3.0, -1.0, 2), (1.0, 2.0, 2.0, 3)];
    let mut out = [0.0; 3];
    for (slot, (a, b, norm, pow)) in out.iter_mut().zip(cases) {
        // For u_1 the x ln x image is nearly collinear with the intercept and its
        // contamination only enters at relative order ε·ln x, so it is left out.
        let extra = if pow == 1 { 1 } else { 2 };
        let mut m = DMatrix::zeros(rows.len(), ANNIHILATOR_TERMS + extra);
        let mut rhs = DVector::zeros(rows.len());
        for (r, &i) in rows.iter().enumerate() {
            let x = g.x(i);
            let t = x / xh;
            let mut p = 1.0;
            for c in 0..ANNIHILATOR_TERMS {
                m[(r, c)] = p;
                p *= t;
            }
            let scale = norm * x.powi(pow);
            // Images of 1 and of x ln x, normalized at the right end of the band.
            let log_image = (2.0 - a - b) * x + (1.0 - a) * (1.0 - b) * x * x.ln();
            m[(r, ANNIHILATOR_TERMS)] = a * b / scale * xl.powi(pow);
            if extra == 2 {
                m[(r, ANNIHILATOR_TERMS + 1)] = log_image / scale * xl.powi(pow - 1);
            }
            let v = d2[i] - (a + b) * d1[i] + a * b * w.values[i];
            rhs[r] = v / scale;
        }
        *slot = lstsq(m, rhs)?[0];
    }
    Ok(out)
}

/// Leading expansion coefficients `(u_1, .., u_order)` of `w` at `x = 0`.
///
/// Fits `max(3, order)` powers on the band `s <= s_min + FIT_BAND`.
pub fn extract_coefficients(w: &GridFunction, order: usize) -> Result<Vec<f64>> {
    if !(1..=3).contains(&order) {
        return Err(Error::InvalidParameter {
            name: "order",
            reason: format!("expansion order must be in 1..=3, got {order}"),
        });
    }
    let c = fit_power_series(w, w.grid.s_min + FIT_BAND, order.max(3))?;
    Ok(c[..order].to_vec())
}

/// Fitted left-tail model `F(s) ≈ c·e^{γs}(1 + β e^{s})` for `s` below the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub c: f64,
    pub gamma: f64,
    pub beta: f64,
    /// False when the band had sign changes and only a crude rate is available.
    pub reliable: bool,
}

impl DecayFit {
    const ZERO: Self = Self {
        c: 0.0,
        gamma: f64::INFINITY,
        beta: 0.0,
        reliable: true,
    };

    /// `∫_{-∞}^{s0} F ds` of the model.
    pub fn tail_integral(&self, s0: f64) -> f64 {
        if self.c == 0.0 || !self.reliable {
            return 0.0;
        }
        let g = self.gamma;
        self.c * (g * s0).exp() * (1.0 / g + self.beta * s0.exp() / (g + 1.0))
    }
}

/// Number of leftmost nodes used by [`decay_probe`].
fn probe_nodes(n: usize) -> usize {
    (n / 16).clamp(8, 32)
}

/// Fits the leading power of `f` near the left edge; fails unless the exponent is positive.
pub fn decay_probe(f: &GridFunction) -> Result<DecayFit> {
    let m = probe_nodes(f.len());
    let band = &f.values[..m];
    let g = f.grid;
    if band.iter().all(|v| *v == 0.0) {
        return Ok(DecayFit::ZERO);
    }
    let sign = band.iter().find(|v| **v != 0.0).unwrap().signum();
    let one_signed = band.iter().all(|v| *v * sign > 0.0);
    if !one_signed {
        let half = m / 2;
        let rms = |s: &[f64]| (s.iter().map(|v| v * v).sum::<f64>() / s.len() as f64).sqrt();
        let (r1, r2) = (rms(&band[..half]), rms(&band[half..]));
        let gamma = if r1 == 0.0 {
            f64::INFINITY
        } else {
            (r2 / r1).ln() / (half as f64 * g.h())
        };
        if !(gamma > 1e-6) {
            return Err(Error::DecayProbe { gamma });
        }
        return Ok(DecayFit {
            c: 0.0,
            gamma,
            beta: 0.0,
            reliable: false,
        });
    }
    let s0 = g.s(0);
    let xe = g.x(m - 1);
    let mut a = DMatrix::zeros(m, 3);
    let mut b = DVector::zeros(m);
    for r in 0..m {
        let s = g.s(r);
        a[(r, 0)] = 1.0;
        a[(r, 1)] = s - s0;
        a[(r, 2)] = s.exp() / xe;
        b[r] = band[r].abs().ln();
    }
    let sol = lstsq(a, b)?;
    let gamma = sol[1];
    if !(gamma > 1e-6) {
        return Err(Error::DecayProbe { gamma });
    }
    Ok(DecayFit {
        c: sign * (sol[0] - gamma * s0).exp(),
        gamma,
        beta: sol[2] / xe,
        reliable: true,
    })
}

/// `∫_{s_0}^{s_i} f ds` for every node by the trapezoid rule with two
/// Euler-Maclaurin end corrections; with `tail`, the fitted contribution from
/// `s < s_min` is added and the decay probe must pass.
pub fn cumulative_integral(f: &GridFunction, tail: bool) -> Result<GridFunction> {
    cumulative(f, tail, true)
}

/// Same as [`cumulative_integral`] without the end corrections.
pub fn cumulative_trapezoid(f: &GridFunction, tail: bool) -> Result<GridFunction> {
    cumulative(f, tail, false)
}

fn cumulative(f: &GridFunction, tail: bool, corrected: bool) -> Result<GridFunction> {
    let n = f.len();
    let h = f.grid.h();
    let (d1, d3) = if corrected {
        (d_derivative(f, 1)?.values, d_derivative(f, 3)?.values)
    } else {
        (vec![0.0; n], vec![0.0; n])
    };
    let offset = if tail {
        decay_probe(f)?.tail_integral(f.grid.s_min)
    } else {
        0.0
    };
    let mut out = vec![0.0; n];
    let mut trap = 0.0;
    out[0] = offset;
    for i in 1..n {
        trap += 0.5 * h * (f.values[i - 1] + f.values[i]);
        let corr = -h * h / 12.0 * (d1[i] - d1[0]) + h.powi(4) / 720.0 * (d3[i] - d3[0]);
        out[i] = offset + trap + corr;
    }
    Ok(GridFunction {
        grid: f.grid,
        values: out,
    })
}
