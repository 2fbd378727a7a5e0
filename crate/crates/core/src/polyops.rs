//! Quartic polynomials in `D = x∂x`, the operators built from them and the
//! truncated ODE system for the contact-line expansion coefficients.

use crate::error::{Error, Result};
use crate::grid::{d_derivative, GridFunction};
use serde::{Deserialize, Serialize};

/// Monic quartic `∏(ζ - γⱼ)` stored by its sorted real roots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolynomialOperator {
    roots: [f64; 4],
}

impl PolynomialOperator {
    /// Builds the polynomial from its roots (sorted on construction).
    pub fn from_roots(mut roots: [f64; 4]) -> Self {
        roots.sort_by(f64::total_cmp);
        Self { roots }
    }

    /// Sorted roots `γ₁ <= .. <= γ₄`.
    pub fn roots(&self) -> [f64; 4] {
        self.roots
    }

    /// `p(ζ) = ζ²(ζ-1)(ζ-2)`.
    pub fn p() -> Self {
        Self::from_roots([0.0, 0.0, 1.0, 2.0])
    }

    /// `q(ζ) = ζ(ζ-1)²(ζ-2)`.
    pub fn q() -> Self {
        Self::from_roots([0.0, 1.0, 1.0, 2.0])
    }

    /// `p̃(ζ) = ζ²(ζ-2)²`.
    pub fn p_tilde() -> Self {
        Self::from_roots([0.0, 0.0, 2.0, 2.0])
    }

    /// `q̃(ζ) = ζ(ζ-1)(ζ-2)(ζ-3)`.
    pub fn q_tilde() -> Self {
        Self::from_roots([0.0, 1.0, 2.0, 3.0])
    }

    /// `p̌(ζ) = ζ²(ζ-2)(ζ-3)`.
    pub fn p_check() -> Self {
        Self::from_roots([0.0, 0.0, 2.0, 3.0])
    }

    /// `q̌(ζ) = ζ(ζ-1)(ζ-3)(ζ-4)`.
    pub fn q_check() -> Self {
        Self::from_roots([0.0, 1.0, 3.0, 4.0])
    }

    /// The six canonical polynomials with their names.
    pub fn canonical() -> [(&'static str, Self); 6] {
        [
            ("p", Self::p()),
            ("q", Self::q()),
            ("p_tilde", Self::p_tilde()),
            ("q_tilde", Self::q_tilde()),
            ("p_check", Self::p_check()),
            ("q_check", Self::q_check()),
        ]
    }

    /// Monomial coefficients `[c0, c1, c2, c3, c4]` of `Σ cᵢ ζⁱ`.
    pub fn coefficients(&self) -> [f64; 5] {
        let mut c = [1.0, 0.0, 0.0, 0.0, 0.0];
        let mut deg = 0;
        for &g in &self.roots {
            deg += 1;
            for i in (0..=deg).rev() {
                let lower = if i > 0 { c[i - 1] } else { 0.0 };
                c[i] = lower - g * c[i];
            }
        }
        c
    }

    /// `∏(ζ - γⱼ)`.
    pub fn eval(&self, z: f64) -> f64 {
        self.roots.iter().map(|g| z - g).product()
    }

    /// Horner evaluation of the expanded form.
    pub fn eval_expanded(&self, z: f64) -> f64 {
        self.coefficients().iter().rev().fold(0.0, |acc, c| acc * z + c)
    }

    /// Root mean `m`.
    pub fn mean(&self) -> f64 {
        self.roots.iter().sum::<f64>() / 4.0
    }

    /// Root spread `σ` with `σ² = ¼ Σ (γⱼ - m)²`.
    pub fn sigma(&self) -> f64 {
        let m = self.mean();
        (self.roots.iter().map(|g| (g - m).powi(2)).sum::<f64>() / 4.0).sqrt()
    }

    /// Polynomial with every root shifted by `c`.
    pub fn shifted(&self, c: f64) -> Self {
        Self::from_roots(self.roots.map(|g| g + c))
    }

    /// `P(D) w` with fourth-order finite differences.
    pub fn apply(&self, w: &GridFunction) -> Result<GridFunction> {
        let c = self.coefficients();
        let mut out = w.scale(c[0]);
        for (j, cj) in c.iter().enumerate().skip(1) {
            if *cj != 0.0 {
                out = out.axpby(1.0, &d_derivative(w, j)?, *cj)?;
            }
        }
        Ok(out)
    }
}

/// `∏(ζ - γⱼ)` for `P`.
pub fn eval_poly(p: &PolynomialOperator, z: f64) -> f64 {
    p.eval(z)
}

/// `(p_k, q_k)` with roots `{0, -k, 1-k, 2-k}` and `{0, 1, 1-k, 2-k}`.
pub fn shifted_pair(k: u32) -> (PolynomialOperator, PolynomialOperator) {
    let k = k as f64;
    (
        PolynomialOperator::from_roots([0.0, -k, 1.0 - k, 2.0 - k]),
        PolynomialOperator::from_roots([0.0, 1.0, 1.0 - k, 2.0 - k]),
    )
}

/// `(p(j), q(j))`, so that `𝒜 xʲ = p(j) x^{j-1} + q(j) x^{j-2}`.
pub fn monomial_action(j: u32) -> (f64, f64) {
    let z = j as f64;
    (PolynomialOperator::p().eval(z), PolynomialOperator::q().eval(z))
}

/// Composite operators `x⁻¹P(D) + x⁻²Q(D)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Composite {
    A,
    ATilde,
    ACheck,
}

impl Composite {
    /// The `(x⁻¹, x⁻²)` polynomial pair.
    pub fn pair(self) -> (PolynomialOperator, PolynomialOperator) {
        match self {
            Self::A => (PolynomialOperator::p(), PolynomialOperator::q()),
            Self::ATilde => (PolynomialOperator::p_tilde(), PolynomialOperator::q_tilde()),
            Self::ACheck => (PolynomialOperator::p_check(), PolynomialOperator::q_check()),
        }
    }

    /// Display name.
    pub fn name(self) -> &'static str {
        match self {
            Self::A => "A",
            Self::ATilde => "A_tilde",
            Self::ACheck => "A_check",
        }
    }

    /// `x⁻¹P(D)w + x⁻²Q(D)w` with finite differences.
    pub fn apply(self, w: &GridFunction) -> Result<GridFunction> {
        let (p, q) = self.pair();
        let pw = p.apply(w)?;
        let qw = q.apply(w)?;
        Ok(GridFunction {
            grid: w.grid,
            values: (0..w.len())
                .map(|i| {
                    let x = w.grid.x(i);
                    pw.values[i] / x + qw.values[i] / (x * x)
                })
                .collect(),
        })
    }
}

/// Which commutation identity to test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommuteVariant {
    /// `(D-1)𝒜 = 𝒜̃(D-1)`.
    Tilde,
    /// `(D-2)𝒜̃ = 𝒜̌(D-2)`.
    Check,
}

/// Interior nodes skipped on each side by [`commutation_residual`].
pub const COMMUTE_MARGIN: usize = 8;

fn shift_d(w: &GridFunction, c: f64) -> Result<GridFunction> {
    d_derivative(w, 1)?.axpby(1.0, w, -c)
}

/// Max-norm on interior nodes of `(D-c)L w - R (D-c) w` for the chosen variant.
pub fn commutation_residual(variant: CommuteVariant, w: &GridFunction) -> Result<f64> {
    let (outer, inner, c) = match variant {
        CommuteVariant::Tilde => (Composite::A, Composite::ATilde, 1.0),
        CommuteVariant::Check => (Composite::ATilde, Composite::ACheck, 2.0),
    };
    let need = 2 * COMMUTE_MARGIN + 10;
    if w.len() < need {
        return Err(Error::GridTooSmall {
            need,
            have: w.len(),
        });
    }
    let lhs = shift_d(&outer.apply(w)?, c)?;
    let rhs = inner.apply(&shift_d(w, c)?)?;
    let n = w.len();
    Ok((COMMUTE_MARGIN..n - COMMUTE_MARGIN)
        .map(|i| (lhs.values[i] - rhs.values[i]).abs())
        .fold(0.0, f64::max))
}

/// Expansion coefficients `u_1..u_J` and forcing coefficients `f_1..f_J`.
///
/// The closure `u_{J+1} = u_{J+2} = 0` is implied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientVector {
    pub u: Vec<f64>,
    pub f: Vec<f64>,
}

impl CoefficientVector {
    /// Vector with zero forcing.
    pub fn unforced(u: Vec<f64>) -> Self {
        let f = vec![0.0; u.len()];
        Self { u, f }
    }

    /// Truncation order `J`.
    pub fn order(&self) -> usize {
        self.u.len()
    }

    /// Number of padded zero coefficients beyond `J`.
    pub const CLOSURE_PADDING: usize = 2;

    /// `du_j/dt = f_j - p(j+1)u_{j+1} - q(j+2)u_{j+2}`.
    fn rhs(u: &[f64], f: &[f64], pj: &[f64], qj: &[f64]) -> Vec<f64> {
        let jn = u.len();
        (0..jn)
            .map(|i| {
                let u1 = if i + 1 < jn { u[i + 1] } else { 0.0 };
                let u2 = if i + 2 < jn { u[i + 2] } else { 0.0 };
                f[i] - pj[i] * u1 - qj[i] * u2
            })
            .collect()
    }
}

/// Times and coefficient states produced by [`integrate_coefficients`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<CoefficientVector>,
}

/// Classical RK4 for the truncated coefficient system on `[0, T]`.
///
/// `forcing(t)` returns `f_1..f_J` at time `t`.
pub fn integrate_coefficients(
    cv0: &CoefficientVector,
    forcing: impl Fn(f64) -> Vec<f64>,
    dt: f64,
    t_end: f64,
) -> Result<CoefficientTrajectory> {
    let jn = cv0.order();
    if jn == 0 {
        return Err(Error::InvalidParameter {
            name: "J",
            reason: "truncation order must be at least 1".into(),
        });
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter {
            name: "dt",
            reason: format!("must be positive, got {dt}"),
        });
    }
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidParameter {
            name: "T",
            reason: format!("must be non-negative, got {t_end}"),
        });
    }
    if cv0.u.iter().chain(&cv0.f).any(|v| !v.is_finite()) || cv0.f.len() != jn {
        return Err(Error::NonFinite {
            context: "initial coefficients",
        });
    }
    let p = PolynomialOperator::p();
    let q = PolynomialOperator::q();
    let pj: Vec<f64> = (1..=jn).map(|j| p.eval((j + 1) as f64)).collect();
    let qj: Vec<f64> = (1..=jn).map(|j| q.eval((j + 2) as f64)).collect();
    let steps = (t_end / dt).round() as usize;
    let mut u = cv0.u.clone();
    let mut times = vec![0.0];
    let mut states = vec![CoefficientVector {
        u: u.clone(),
        f: forcing(0.0),
    }];
    let axpy = |a: &[f64], c: f64, b: &[f64]| -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x + c * y).collect()
    };
    for s in 0..steps {
        let t = s as f64 * dt;
        let f0 = forcing(t);
        let fh = forcing(t + 0.5 * dt);
        let f1 = forcing(t + dt);
        if f0.len() != jn || fh.len() != jn || f1.len() != jn {
            return Err(Error::InvalidParameter {
                name: "forcing",
                reason: format!("expected {jn} coefficients"),
            });
        }
        let k1 = CoefficientVector::rhs(&u, &f0, &pj, &qj);
        let k2 = CoefficientVector::rhs(&axpy(&u, 0.5 * dt, &k1), &fh, &pj, &qj);
        let k3 = CoefficientVector::rhs(&axpy(&u, 0.5 * dt, &k2), &fh, &pj, &qj);
        let k4 = CoefficientVector::rhs(&axpy(&u, dt, &k3), &f1, &pj, &qj);
        for i in 0..jn {
            u[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "coefficient integration",
            });
        }
        times.push((s + 1) as f64 * dt);
        states.push(CoefficientVector { u: u.clone(), f: f1 });
    }
    Ok(CoefficientTrajectory { times, states })
}
