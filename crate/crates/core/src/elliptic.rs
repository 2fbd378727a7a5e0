//! The factorization `𝒜 = ...ℬ` of the degenerate elliptic operator: `ℬ`, its
//! integral inverse, the full inverse `𝒮` of `𝒜`, and weighted Hardy checks.

use crate::coercivity::SUPPORT_MARGIN;
use crate::error::{Error, Result};
use crate::grid::{
    cumulative_integral, cumulative_trapezoid, d_derivative, decay_probe, weighted_norm_sq,
    GridFunction, NormSpec,
};
use crate::polyops::PolynomialOperator;
use serde::{Deserialize, Serialize};

/// Cumulative quadrature used by the integral inverses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureRule {
    /// Plain cumulative trapezoid rule on the grid.
    Trapezoid,
    /// Trapezoid rule with Euler-Maclaurin end corrections.
    #[default]
    EndCorrected,
}

impl QuadratureRule {
    fn integrate(self, f: &GridFunction) -> Result<GridFunction> {
        match self {
            Self::Trapezoid => cumulative_trapezoid(f, true),
            Self::EndCorrected => cumulative_integral(f, true),
        }
    }
}

/// `ℬw = x(Dw - 2w) + Dw`.
pub fn apply_b(w: &GridFunction) -> Result<GridFunction> {
    let dw = d_derivative(w, 1)?;
    Ok(GridFunction {
        grid: w.grid,
        values: (0..w.len())
            .map(|i| {
                let x = w.grid.x(i);
                x * (dw.values[i] - 2.0 * w.values[i]) + dw.values[i]
            })
            .collect(),
    })
}

/// `ℬ⁻¹f = (x+1)² ∫_{-∞}^{s} (1+e^{s'})⁻³ f ds'`.
pub fn apply_b_inverse(f: &GridFunction) -> Result<GridFunction> {
    apply_b_inverse_with(f, QuadratureRule::default())
}

/// [`apply_b_inverse`] with an explicit quadrature rule.
pub fn apply_b_inverse_with(f: &GridFunction, rule: QuadratureRule) -> Result<GridFunction> {
    decay_probe(f)?;
    let integrand = f.map_x(|x, v| v / (1.0 + x).powi(3));
    let c = rule.integrate(&integrand)?;
    Ok(c.map_x(|x, v| (1.0 + x).powi(2) * v))
}

/// `𝒮g`, the solution of `𝒜u = g` that is flat to second order at `x = 0`,
/// as four nested cumulative integrals in `s`.
pub fn apply_s(g: &GridFunction) -> Result<GridFunction> {
    apply_s_with(g, QuadratureRule::default())
}

/// [`apply_s`] with an explicit quadrature rule.
pub fn apply_s_with(g: &GridFunction, rule: QuadratureRule) -> Result<GridFunction> {
    decay_probe(g)?;
    let i4 = rule.integrate(&g.map_x(|x, v| x * v))?;
    let i3 = rule.integrate(&i4)?;
    let i2 = rule.integrate(&i3.map_x(|x, v| v / x))?;
    let i1 = rule.integrate(&i2.map_x(|x, v| x * x * v / (1.0 + x).powi(3)))?;
    Ok(i1.map_x(|x, v| (1.0 + x).powi(2) * v))
}

/// Which weighted Hardy inequality to test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HardyVariant {
    /// `|Dg|²_γ` against `|g|²_γ`.
    First,
    /// `|(D-1)g|²_{γ-½}` against `|g|²_{γ-½}`.
    Second,
    /// `|(D-2)g|²_{γ-1}` against `|g|²_{γ-1}`.
    Third,
}

impl HardyVariant {
    /// All three variants.
    pub const ALL: [Self; 3] = [Self::First, Self::Second, Self::Third];

    fn shift(self) -> f64 {
        match self {
            Self::First => 0.0,
            Self::Second => 1.0,
            Self::Third => 2.0,
        }
    }

    fn weight(self, gamma: f64) -> f64 {
        gamma - 0.5 * self.shift()
    }

    /// Constant claimed for the inequality: `(γ-1)²`, `(γ-5/2)²`, `(γ-4)²`.
    pub fn stated_constant(self, gamma: f64) -> f64 {
        match self {
            Self::First => (gamma - 1.0).powi(2),
            Self::Second => (gamma - 2.5).powi(2),
            Self::Third => (gamma - 4.0).powi(2),
        }
    }

    /// Best constant from the symbol `|iξ + weight - shift|²`: `γ²`, `(γ-3/2)²`, `(γ-3)²`.
    pub fn sharp_constant(self, gamma: f64) -> f64 {
        (self.weight(gamma) - self.shift()).powi(2)
    }
}

/// Result of one weighted Hardy check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardyCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// Constant under test.
    pub constant: f64,
    /// Optimal constant for comparison.
    pub sharp_constant: f64,
}

impl HardyCheck {
    /// `lhs >= constant·rhs` up to a relative slack.
    pub fn holds(&self, rel_tol: f64) -> bool {
        self.lhs >= self.constant * self.rhs - rel_tol * self.lhs.max(self.constant * self.rhs)
    }
}

/// Evaluates one Hardy inequality for `g` supported in the grid interior.
pub fn hardy_check(g: &GridFunction, gamma: f64, variant: HardyVariant) -> Result<HardyCheck> {
    if !g.vanishes_near_edges(SUPPORT_MARGIN) {
        return Err(Error::SupportTouchesBoundary);
    }
    let c = variant.shift();
    let w = variant.weight(gamma);
    let dg = d_derivative(g, 1)?.axpby(1.0, g, -c)?;
    Ok(HardyCheck {
        lhs: weighted_norm_sq(&dg, NormSpec::new(0, w))?,
        rhs: weighted_norm_sq(g, NormSpec::new(0, w))?,
        constant: variant.stated_constant(gamma),
        sharp_constant: variant.sharp_constant(gamma),
    })
}

/// `(|w|_{k+4,ϱ}, |P(D)w|_{k,ϱ})` for logging equivalence ratios.
///
/// Fails unless `w` vanishes near the contact line faster than `x^ϱ`.
pub fn polynomial_elliptic_check(
    p: &PolynomialOperator,
    w: &GridFunction,
    rho: f64,
    k: usize,
) -> Result<(f64, f64)> {
    let probe = decay_probe(w)?;
    if probe.gamma <= rho {
        return Err(Error::DecayProbe { gamma: probe.gamma });
    }
    let pw = p.apply(w)?;
    Ok((
        weighted_norm_sq(w, NormSpec::new(k + 4, rho))?.sqrt(),
        weighted_norm_sq(&pw, NormSpec::new(k, rho))?.sqrt(),
    ))
}
