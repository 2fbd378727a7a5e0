//! Weighted norms `|·|_{k,α}` and the composite solution, initial-data and
//! right-hand-side norms built from them.

use super::fit::{fit_power_series, FIT_BAND, NEAR_FIELD_X};
use super::stencil::{d_derivative, high_order_stride, Stencil};
use super::GridFunction;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Request for `|w - Σ_{i≤sub} w_i x^i|_{k,α}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub k: usize,
    pub alpha: f64,
    pub sub: usize,
}

impl NormSpec {
    /// Plain weighted norm without subtraction.
    pub fn new(k: usize, alpha: f64) -> Self {
        Self { k, alpha, sub: 0 }
    }

    /// Same norm with the first `sub` expansion terms removed.
    pub fn with_sub(self, sub: usize) -> Self {
        Self { sub, ..self }
    }
}

/// Samples of `∂ₛʲ w` for `j = 0..=k`.
fn derivative_ladder(w: &GridFunction, k: usize) -> Result<Vec<Vec<f64>>> {
    let mut out = vec![w.values.clone()];
    for j in 1..=k.min(4) {
        out.push(d_derivative(w, j)?.values);
    }
    for j in 5..=k {
        let st = Stencil::new(w.len(), w.grid.h(), j, high_order_stride(w.grid.h()))?;
        out.push(st.apply(&w.values));
    }
    Ok(out)
}

/// Upper end in `s` of the near-field band used for subtracted norms.
pub(crate) fn near_field_s(w: &GridFunction) -> f64 {
    NEAR_FIELD_X.ln().max(w.grid.s_min + FIT_BAND)
}

/// Derivative ladder of `w - Σ_{i≤sub} c_i x^i` with the near-field band
/// replaced by the fitted series, which keeps subtracted norms free of
/// cancellation noise at the contact line.
fn subtracted_ladder(w: &GridFunction, k: usize, sub: usize) -> Result<Vec<Vec<f64>>> {
    if sub == 0 {
        return derivative_ladder(w, k);
    }
    let terms = (sub + 2).max(6);
    let s_hi = near_field_s(w);
    let c = fit_power_series(w, s_hi, terms)?;
    let g = w.grid;
    let r = w.map_x(|x, v| {
        v - (1..=sub).map(|i| c[i - 1] * x.powi(i as i32)).sum::<f64>()
    });
    let mut ladder = derivative_ladder(&r, k)?;
    let last = g.last_index_below(s_hi).unwrap_or(0);
    for (j, row) in ladder.iter_mut().enumerate() {
        for (node, val) in row.iter_mut().enumerate().take(last + 1) {
            let x = g.x(node);
            *val = (sub + 1..=terms)
                .map(|i| c[i - 1] * (i as f64).powi(j as i32) * x.powi(i as i32))
                .sum();
        }
    }
    Ok(ladder)
}

/// `|w - Σ_{i≤sub} w_i x^i|²_{k,α}` by the trapezoid rule in `s`.
pub fn weighted_norm_sq(w: &GridFunction, spec: NormSpec) -> Result<f64> {
    let ladder = subtracted_ladder(w, spec.k, spec.sub)?;
    let g = w.grid;
    let h = g.h();
    let n = w.len();
    let weights: Vec<f64> = (0..n)
        .map(|i| {
            let t = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            t * h * (-2.0 * spec.alpha * g.s(i)).exp()
        })
        .collect();
    let mut total = 0.0;
    for row in &ladder {
        total += row
            .iter()
            .zip(&weights)
            .map(|(v, wt)| wt * v * v)
            .sum::<f64>();
    }
    Ok(total)
}

/// `|w - Σ_{i≤sub} w_i x^i|_{k,α}`.
pub fn weighted_norm(w: &GridFunction, spec: NormSpec) -> Result<f64> {
    weighted_norm_sq(w, spec).map(f64::sqrt)
}

/// Which composite norm to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompositeKind {
    Sol,
    Init,
    Rhs,
}

/// Parameters `(N, k, δ)` of the composite norms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompositeParams {
    pub n: usize,
    pub k: usize,
    pub delta: f64,
}

impl CompositeParams {
    fn validate(&self) -> Result<()> {
        if self.n > 2 {
            return Err(Error::UnsupportedOrder(self.n));
        }
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return Err(Error::InvalidParameter {
                name: "delta",
                reason: format!("must lie in (0, 1/2), got {}", self.delta),
            });
        }
        Ok(())
    }
}

/// Element `(α, ℓ, m)` of the index sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexTriple {
    pub alpha: f64,
    pub ell: usize,
    pub m: usize,
}

/// `I_{N,δ}`: `α ∈ {δ, 1+δ}` and `ℓ + m <= N - ⌊α⌋`.
pub fn index_set_i(n: isize, delta: f64) -> Vec<IndexTriple> {
    let mut out = Vec::new();
    for alpha in [delta, 1.0 + delta] {
        let cap = n - alpha.floor() as isize;
        if cap < 0 {
            continue;
        }
        for ell in 0..=cap as usize {
            for m in 0..=(cap as usize - ell) {
                out.push(IndexTriple { alpha, ell, m });
            }
        }
    }
    out
}

/// `J_{N,δ} = I_{N,δ} ∪ {(α,ℓ,m) : (α+½,ℓ,m) ∈ I_{N,δ}}`.
pub fn index_set_j(n: isize, delta: f64) -> Vec<IndexTriple> {
    let base = index_set_i(n, delta);
    let mut out = base.clone();
    out.extend(base.iter().map(|t| IndexTriple {
        alpha: t.alpha - 0.5,
        ..*t
    }));
    out
}

/// Time-dependent family of grid functions.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<GridFunction>,
}

impl Trajectory {
    /// Final time minus initial time.
    pub fn horizon(&self) -> f64 {
        match (self.times.first(), self.times.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    /// Second-order finite-difference time derivative of every state.
    pub fn time_derivative(&self) -> Result<Trajectory> {
        let n = self.states.len();
        if n < 3 {
            return Err(Error::TrajectoryTooShort { need: 3, have: n });
        }
        let t = &self.times;
        let lin = |a: &GridFunction, ca: f64, b: &GridFunction, cb: f64, c: &GridFunction, cc: f64| {
            GridFunction {
                grid: a.grid,
                values: (0..a.len())
                    .map(|i| ca * a.values[i] + cb * b.values[i] + cc * c.values[i])
                    .collect(),
            }
        };
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let (j0, j1, j2) = if i == 0 {
                (0, 1, 2)
            } else if i == n - 1 {
                (n - 3, n - 2, n - 1)
            } else {
                (i - 1, i, i + 1)
            };
            let (t0, t1, t2, ti) = (t[j0], t[j1], t[j2], t[i]);
            let c0 = (2.0 * ti - t1 - t2) / ((t0 - t1) * (t0 - t2));
            let c1 = (2.0 * ti - t0 - t2) / ((t1 - t0) * (t1 - t2));
            let c2 = (2.0 * ti - t0 - t1) / ((t2 - t0) * (t2 - t1));
            out.push(lin(
                &self.states[j0],
                c0,
                &self.states[j1],
                c1,
                &self.states[j2],
                c2,
            ));
        }
        Ok(Trajectory {
            times: self.times.clone(),
            states: out,
        })
    }

    fn underlined(&self) -> Trajectory {
        Trajectory {
            times: self.times.clone(),
            states: self
                .states
                .iter()
                .map(|w| w.map_x(|x, v| v / (x + 1.0)))
                .collect(),
        }
    }
}

/// One summand of a composite norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormTerm {
    pub label: String,
    pub spec: NormSpec,
    pub value_sq: f64,
}

/// Evaluated composite norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub kind: CompositeKind,
    pub params: CompositeParams,
    pub squared: f64,
    pub value: f64,
    /// Time horizon covered; suprema and integrals beyond it are not included.
    pub horizon: f64,
    pub terms: Vec<NormTerm>,
}

fn clamp_sub(v: isize) -> usize {
    v.max(0) as usize
}

/// `|||w|||_init` for a single state.
pub fn composite_init(w: &GridFunction, p: CompositeParams) -> Result<NormReport> {
    p.validate()?;
    let nn = p.n as isize;
    let mut specs: BTreeMap<(usize, i64), NormSpec> = BTreeMap::new();
    for t in index_set_i(nn, p.delta) {
        for r in 0..=t.m {
            let sub = clamp_sub(t.alpha.floor() as isize + (t.m + r) as isize);
            let alpha = t.alpha + (t.m + r) as f64;
            let spec = NormSpec {
                k: p.k + 4 * p.n + 1,
                alpha,
                sub,
            };
            specs.insert((sub, (alpha * 1e6).round() as i64), spec);
        }
    }
    let mut terms = Vec::new();
    let mut total = 0.0;
    for spec in specs.into_values() {
        let v = weighted_norm_sq(w, spec)?;
        total += v;
        terms.push(NormTerm {
            label: format!("|u - P{}|^2_{{{},{}}}", spec.sub, spec.k, spec.alpha),
            spec,
            value_sq: v,
        });
    }
    Ok(NormReport {
        kind: CompositeKind::Init,
        params: p,
        squared: total,
        value: total.sqrt(),
        horizon: 0.0,
        terms,
    })
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Field {
    Plain,
    Under,
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Reduce {
    Sup,
    Integral,
}

type TermKey = (Reduce, Field, usize, usize, usize, i64);

fn trapezoid_in_time(times: &[f64], vals: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(vals.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

/// `|||u|||_sol` or `|||f|||_rhs` over a stored trajectory.
///
/// Suprema are maxima over stored steps and time integrals use the trapezoid
/// rule, so the result is the finite-horizon value on `[t_0, t_end]`.
pub fn composite_trajectory(
    traj: &Trajectory,
    kind: CompositeKind,
    p: CompositeParams,
) -> Result<NormReport> {
    p.validate()?;
    if kind == CompositeKind::Init {
        let first = traj.states.first().ok_or(Error::TrajectoryTooShort {
            need: 1,
            have: 0,
        })?;
        return composite_init(first, p);
    }
    if traj.states.len() < 3 {
        return Err(Error::TrajectoryTooShort {
            need: 3,
            have: traj.states.len(),
        });
    }
    let nn = p.n as isize;
    let k = p.k as isize;
    let mut wanted: BTreeMap<TermKey, NormSpec> = BTreeMap::new();
    let mut add = |reduce: Reduce, field: Field, ell: usize, kk: isize, sub: isize, alpha: f64| {
        let spec = NormSpec {
            k: kk.max(0) as usize,
            alpha,
            sub: clamp_sub(sub),
        };
        wanted.insert(
            (
                reduce,
                field,
                ell,
                spec.k,
                spec.sub,
                (alpha * 1e6).round() as i64,
            ),
            spec,
        );
    };
    match kind {
        CompositeKind::Sol => {
            for t in index_set_i(nn, p.delta) {
                let fa = t.alpha.floor() as isize;
                for r in 0..=t.m {
                    let mr = (t.m + r) as isize;
                    add(
                        Reduce::Sup,
                        Field::Plain,
                        t.ell,
                        k + 4 * (nn - t.ell as isize) + 1,
                        fa + mr,
                        t.alpha + mr as f64,
                    );
                }
            }
            for t in index_set_j(nn, p.delta) {
                let fa = t.alpha.floor() as isize;
                for r in 0..=t.m {
                    let mr = (t.m + r) as isize;
                    let kl = k + 4 * (nn - t.ell as isize);
                    add(
                        Reduce::Integral,
                        Field::Under,
                        t.ell + 1,
                        kl - 1,
                        fa + mr - 1,
                        t.alpha + mr as f64 - 1.0,
                    );
                    add(
                        Reduce::Integral,
                        Field::Plain,
                        t.ell,
                        kl + 3,
                        fa + mr + 1,
                        t.alpha + mr as f64 + 1.0,
                    );
                }
            }
        }
        CompositeKind::Rhs => {
            for t in index_set_i(nn - 1, p.delta) {
                let fa = t.alpha.floor() as isize;
                for r in 0..=t.m {
                    let mr = (t.m + r) as isize;
                    add(
                        Reduce::Sup,
                        Field::Plain,
                        t.ell,
                        k + 4 * (nn - t.ell as isize) - 3,
                        fa + mr,
                        t.alpha + mr as f64,
                    );
                }
            }
            for t in index_set_j(nn, p.delta) {
                let fa = t.alpha.floor() as isize;
                for r in 0..=t.m {
                    let mr = (t.m + r) as isize;
                    add(
                        Reduce::Integral,
                        Field::Under,
                        t.ell,
                        k + 4 * (nn - t.ell as isize) - 1,
                        fa + mr - 1,
                        t.alpha + mr as f64 - 1.0,
                    );
                }
            }
        }
        CompositeKind::Init => unreachable!(),
    }

    let max_ell = wanted.keys().map(|key| key.2).max().unwrap_or(0);
    let mut plain = vec![traj.clone()];
    let mut under = vec![traj.underlined()];
    for l in 1..=max_ell {
        let next = plain[l - 1].time_derivative()?;
        plain.push(next);
        let next = under[l - 1].time_derivative()?;
        under.push(next);
    }

    let mut terms = Vec::new();
    let mut total = 0.0;
    for ((reduce, field, ell, ..), spec) in wanted {
        let src = match field {
            Field::Plain => &plain[ell],
            Field::Under => &under[ell],
        };
        let per_step = src
            .states
            .iter()
            .map(|w| weighted_norm_sq(w, spec))
            .collect::<Result<Vec<f64>>>()?;
        let v = match reduce {
            Reduce::Sup => per_step.iter().fold(0.0f64, |m, v| m.max(*v)),
            Reduce::Integral => trapezoid_in_time(&traj.times, &per_step),
        };
        total += v;
        let name = match field {
            Field::Plain => "u",
            Field::Under => "u/(x+1)",
        };
        let op = match reduce {
            Reduce::Sup => "sup_t",
            Reduce::Integral => "int_t",
        };
        terms.push(NormTerm {
            label: format!(
                "{op} |d_t^{ell} {name} - P{}|^2_{{{},{}}}",
                spec.sub, spec.k, spec.alpha
            ),
            spec,
            value_sq: v,
        });
    }
    Ok(NormReport {
        kind,
        params: p,
        squared: total,
        value: total.sqrt(),
        horizon: traj.horizon(),
        terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::LogGrid;
    use proptest::prelude::*;

    fn exp_norm_sq(beta: f64, alpha: f64, a: f64, b: f64) -> f64 {
        let c = 2.0 * (beta - alpha);
        ((c * b).exp() - (c * a).exp()) / c
    }

    #[test]
    fn exponential_norm_matches_closed_form() {
        let g = LogGrid::new(-6.0, 2.0, 2049).unwrap();
        let beta = 1.3;
        let w = g.sample_s(|s| (beta * s).exp());
        let n0 = weighted_norm(&w, NormSpec::new(0, 0.4)).unwrap();
        let e0 = exp_norm_sq(beta, 0.4, -6.0, 2.0).sqrt();
        assert!((n0 / e0 - 1.0).abs() < 1e-5);
        let n2 = weighted_norm(&w, NormSpec::new(2, 0.4)).unwrap();
        let e2 = e0 * (1.0 + beta * beta + beta.powi(4)).sqrt();
        assert!((n2 / e2 - 1.0).abs() < 1e-5);
    }

    #[test]
    fn zero_has_zero_norm() {
        let g = LogGrid::default();
        assert_eq!(weighted_norm(&g.zeros(), NormSpec::new(8, 1.25).with_sub(2)).unwrap(), 0.0);
        let p = CompositeParams { n: 1, k: 3, delta: 0.25 };
        assert_eq!(composite_init(&g.zeros(), p).unwrap().value, 0.0);
    }

    #[test]
    fn index_sets_for_n1() {
        let i = index_set_i(1, 0.25);
        assert_eq!(i.len(), 4);
        let j = index_set_j(1, 0.25);
        assert_eq!(j.len(), 8);
        assert!(index_set_i(-1, 0.25).is_empty());
    }

    #[test]
    fn init_norm_has_three_terms_for_n1() {
        let g = LogGrid::default();
        let w = g.sample(|x| x.powi(3) * (-x).exp());
        let p = CompositeParams { n: 1, k: 3, delta: 0.25 };
        let rep = composite_init(&w, p).unwrap();
        assert_eq!(rep.terms.len(), 3);
        let direct: f64 = [(0, 0.25), (1, 1.25), (2, 2.25)]
            .iter()
            .map(|&(sub, a)| weighted_norm_sq(&w, NormSpec::new(8, a).with_sub(sub)).unwrap())
            .sum();
        assert!((rep.squared / direct - 1.0).abs() < 1e-12);
    }

    #[test]
    fn init_norm_of_linear_data_is_first_term_only() {
        let g = LogGrid::default();
        let w = g.sample(|x| 0.3 * x);
        let p = CompositeParams { n: 1, k: 3, delta: 0.25 };
        let rep = composite_init(&w, p).unwrap();
        let first = weighted_norm_sq(&w, NormSpec::new(8, 0.25)).unwrap();
        // only rounding noise of the order-8 stencil survives the subtraction
        assert!(rep.terms[1].value_sq < 1e-3 * first);
        assert!(rep.terms[2].value_sq < 1e-3 * first);
    }

    #[test]
    fn unsupported_order_rejected() {
        let g = LogGrid::default();
        let p = CompositeParams { n: 3, k: 3, delta: 0.25 };
        assert_eq!(composite_init(&g.zeros(), p).unwrap_err(), Error::UnsupportedOrder(3));
    }

    #[test]
    fn short_trajectory_rejected() {
        let g = LogGrid::default();
        let tr = Trajectory { times: vec![0.0, 1.0], states: vec![g.zeros(), g.zeros()] };
        let p = CompositeParams { n: 1, k: 3, delta: 0.25 };
        assert!(matches!(
            composite_trajectory(&tr, CompositeKind::Sol, p),
            Err(Error::TrajectoryTooShort { .. })
        ));
    }

    #[test]
    fn time_derivative_exact_on_quadratics() {
        let g = LogGrid::new(0.0, 1.0, 16).unwrap();
        let times = vec![0.0, 0.1, 0.25, 0.4, 0.7];
        let states = times.iter().map(|&t| g.sample(|x| x * t * t)).collect();
        let d = Trajectory { times: times.clone(), states }.time_derivative().unwrap();
        for (t, s) in times.iter().zip(&d.states) {
            let e = g.sample(|x| 2.0 * x * t);
            assert!(s.rel_error_range(&e, 0, 16).unwrap() < 1e-12);
        }
    }

    #[test]
    fn sol_norm_of_steady_zero_is_zero() {
        let g = LogGrid::default();
        let tr = Trajectory { times: vec![0.0, 0.5, 1.0], states: vec![g.zeros(); 3] };
        let p = CompositeParams { n: 1, k: 3, delta: 0.25 };
        let rep = composite_trajectory(&tr, CompositeKind::Sol, p).unwrap();
        assert_eq!(rep.value, 0.0);
        assert_eq!(rep.horizon, 1.0);
        let rhs = composite_trajectory(&tr, CompositeKind::Rhs, p).unwrap();
        assert_eq!(rhs.value, 0.0);
    }

    fn bump(c: f64, w: f64) -> impl Fn(f64) -> f64 {
        move |s: f64| {
            let z = (s - c) / w;
            if z.abs() < 1.0 {
                (-1.0 / (1.0 - z * z)).exp()
            } else {
                0.0
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn norm_is_monotone_in_k(c in -4.0f64..2.0, w in 0.5f64..2.0, alpha in -1.0f64..2.0) {
            let g = LogGrid::new(-8.0, 4.0, 513).unwrap();
            let f = g.sample_s(bump(c, w));
            let mut prev = 0.0;
            for k in 0..=6 {
                let v = weighted_norm(&f, NormSpec::new(k, alpha)).unwrap();
                prop_assert!(v >= prev);
                prev = v;
            }
        }

        #[test]
        fn triangle_and_homogeneity(c1 in -4.0f64..2.0, c2 in -4.0f64..2.0, lam in -3.0f64..3.0) {
            let g = LogGrid::new(-8.0, 4.0, 513).unwrap();
            let a = g.sample_s(bump(c1, 1.0));
            let b = g.sample_s(bump(c2, 1.5));
            for spec in [NormSpec::new(2, 0.3), NormSpec::new(5, 1.2).with_sub(1)] {
                let na = weighted_norm(&a, spec).unwrap();
                let nb = weighted_norm(&b, spec).unwrap();
                let nab = weighted_norm(&a.add(&b).unwrap(), spec).unwrap();
                prop_assert!(nab <= (na + nb) * (1.0 + 1e-12));
                let ns = weighted_norm(&a.scale(lam), spec).unwrap();
                prop_assert!((ns - lam.abs() * na).abs() <= 1e-12 * (1.0 + ns));
            }
        }
    }
}
