//! Weighted coercivity of quartic operators `P(D)` and of the composite
//! operators `x⁻¹P(D) + x⁻²Q(D)`.

use crate::error::{Error, Result};
use crate::grid::{d_derivative, GridFunction};
use crate::polyops::{Composite, PolynomialOperator};
use serde::{Deserialize, Serialize};

/// Margin below which a symbol minimum is treated as zero.
pub const ZERO_MARGIN: f64 = 1e-8;

/// Interior nodes that must vanish for quadratic-form checks.
pub const SUPPORT_MARGIN: usize = 8;

/// Open interval `(lo, hi)`; infinite ends are allowed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    /// Interval from its endpoints.
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    /// Strict containment.
    pub fn contains(&self, a: f64) -> bool {
        a > self.lo && a < self.hi
    }

    /// Nonempty intersection, if any.
    pub fn intersect(&self, other: &Self) -> Option<Self> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo < hi).then_some(Self { lo, hi })
    }

    /// Interval translated by `c`.
    pub fn shifted(&self, c: f64) -> Self {
        Self::new(self.lo + c, self.hi + c)
    }

    /// Largest endpoint distance to `other`.
    pub fn distance(&self, other: &Self) -> f64 {
        let d = |a: f64, b: f64| if a == b { 0.0 } else { (a - b).abs() };
        d(self.lo, other.lo).max(d(self.hi, other.hi))
    }
}

/// Coefficients `(e₂, e₄)` with `Re P(iξ+α) = ξ⁴ - e₂ξ² + e₄`.
fn symbol_coefficients(p: &PolynomialOperator, alpha: f64) -> (f64, f64) {
    let a = p.roots().map(|g| alpha - g);
    let mut e2 = 0.0;
    for i in 0..4 {
        for j in i + 1..4 {
            e2 += a[i] * a[j];
        }
    }
    (e2, a.iter().product())
}

/// `Re ∏(iξ + α - γⱼ)`.
pub fn symbol(p: &PolynomialOperator, alpha: f64, xi: f64) -> f64 {
    let (e2, e4) = symbol_coefficients(p, alpha);
    let mu = xi * xi;
    mu * mu - e2 * mu + e4
}

/// `min_{ξ} Re P(iξ+α)`, exact via `μ = ξ²`.
pub fn min_symbol(p: &PolynomialOperator, alpha: f64) -> f64 {
    let (e2, e4) = symbol_coefficients(p, alpha);
    if e2 <= 0.0 {
        e4
    } else {
        e4 - 0.25 * e2 * e2
    }
}

/// Intersection of the root condition `α ∉ [γ₁,γ₂] ∪ [γ₃,γ₄]` with the band `|α - m| < σ/√3`.
pub fn range_closed_form(p: &PolynomialOperator) -> Vec<Interval> {
    let g = p.roots();
    let m = p.mean();
    let w = p.sigma() / 3f64.sqrt();
    let band = Interval::new(m - w, m + w);
    [
        Interval::new(f64::NEG_INFINITY, g[0]),
        Interval::new(g[1], g[2]),
        Interval::new(g[3], f64::INFINITY),
    ]
    .iter()
    .filter_map(|piece| piece.intersect(&band))
    .collect()
}

fn polish(f: &impl Fn(f64) -> bool, mut inside: f64, mut outside: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (inside + outside);
        if mid == inside || mid == outside {
            break;
        }
        if f(mid) {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    0.5 * (inside + outside)
}

/// Intervals inside `[lo, hi]` where `min_ξ Re P(iξ+α) > 0`, located on an
/// `n_scan` point scan and polished by bisection. Ends touching the scan
/// window are reported at the window edge.
pub fn range_numeric(p: &PolynomialOperator, lo: f64, hi: f64, n_scan: usize) -> Result<Vec<Interval>> {
    if n_scan < 100 {
        return Err(Error::InvalidParameter {
            name: "n_scan",
            reason: format!("need at least 100 scan points, got {n_scan}"),
        });
    }
    if !(lo < hi) {
        return Err(Error::InvalidParameter {
            name: "alpha range",
            reason: format!("need lo < hi, got [{lo}, {hi}]"),
        });
    }
    let pos = |a: f64| min_symbol(p, a) > ZERO_MARGIN;
    let strict = |a: f64| min_symbol(p, a) > 0.0;
    let step = (hi - lo) / (n_scan - 1) as f64;
    let alphas: Vec<f64> = (0..n_scan).map(|i| lo + i as f64 * step).collect();
    let flags: Vec<bool> = alphas.iter().map(|&a| pos(a)).collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < n_scan {
        if !flags[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i + 1 < n_scan && flags[i + 1] {
            i += 1;
        }
        let left = if start == 0 {
            lo
        } else {
            polish(&strict, alphas[start], alphas[start - 1])
        };
        let right = if i == n_scan - 1 {
            hi
        } else {
            polish(&strict, alphas[i], alphas[i + 1])
        };
        out.push(Interval::new(left, right));
        i += 1;
    }
    Ok(out)
}

/// Scan window and resolution used for default numeric ranges.
pub const DEFAULT_SCAN: (f64, f64, usize) = (-2.0, 6.0, 8001);

fn intersect_lists(a: &[Interval], b: &[Interval]) -> Vec<Interval> {
    let mut out = Vec::new();
    for x in a {
        for y in b {
            if let Some(z) = x.intersect(y) {
                out.push(z);
            }
        }
    }
    out.sort_by(|u, v| u.lo.total_cmp(&v.lo));
    out
}

/// How composite ranges are derived from the polynomial ranges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RangeMethod {
    ClosedForm,
    Numeric,
}

/// `{α : α+½ ∈ range(P), α+1 ∈ range(Q)}` for the pair of `which`.
pub fn composite_range(which: Composite, method: RangeMethod) -> Result<Vec<Interval>> {
    let (p, q) = which.pair();
    let ranges = |poly: &PolynomialOperator| -> Result<Vec<Interval>> {
        match method {
            RangeMethod::ClosedForm => Ok(range_closed_form(poly)),
            RangeMethod::Numeric => {
                let (lo, hi, n) = DEFAULT_SCAN;
                range_numeric(poly, lo, hi, n)
            }
        }
    };
    let rp: Vec<Interval> = ranges(&p)?.iter().map(|i| i.shifted(-0.5)).collect();
    let rq: Vec<Interval> = ranges(&q)?.iter().map(|i| i.shifted(-1.0)).collect();
    Ok(intersect_lists(&rp, &rq))
}

/// Weights at which both composite parts are merely non-negative, on a scan
/// of `[lo, hi]`; used to expose the degenerate case of `𝒜`.
pub fn composite_nonnegative_points(which: Composite, lo: f64, hi: f64, n_scan: usize) -> Vec<f64> {
    let (p, q) = which.pair();
    let step = (hi - lo) / (n_scan.max(2) - 1) as f64;
    (0..n_scan)
        .map(|i| lo + i as f64 * step)
        .filter(|&a| min_symbol(&p, a + 0.5) >= -ZERO_MARGIN && min_symbol(&q, a + 1.0) >= -ZERO_MARGIN)
        .collect()
}

/// Closed-form and numeric ranges of one polynomial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoercivityReport {
    pub poly: PolynomialOperator,
    pub roots: [f64; 4],
    pub mean: f64,
    pub sigma: f64,
    pub closed_form: Vec<Interval>,
    pub numeric: Vec<Interval>,
}

impl CoercivityReport {
    /// Analyzes `p` with the default scan window.
    pub fn new(p: &PolynomialOperator) -> Result<Self> {
        let (lo, hi, n) = DEFAULT_SCAN;
        Ok(Self {
            poly: *p,
            roots: p.roots(),
            mean: p.mean(),
            sigma: p.sigma(),
            closed_form: range_closed_form(p),
            numeric: range_numeric(p, lo, hi, n)?,
        })
    }

    /// `min_ξ Re P(iξ+α)`.
    pub fn margin(&self, alpha: f64) -> f64 {
        min_symbol(&self.poly, alpha)
    }

    /// Largest endpoint discrepancy between closed-form and numeric ranges;
    /// infinite if the interval counts differ.
    pub fn max_discrepancy(&self) -> f64 {
        if self.closed_form.len() != self.numeric.len() {
            return f64::INFINITY;
        }
        self.closed_form
            .iter()
            .zip(&self.numeric)
            .map(|(a, b)| a.distance(b))
            .fold(0.0, f64::max)
    }
}

/// Best constant `c` with `(u, P(D)u)_α >= c |u|²_{2,α}` from the symbol ratio.
pub fn coercivity_constant(p: &PolynomialOperator, alpha: f64) -> f64 {
    let (e2, e4) = symbol_coefficients(p, alpha);
    let a2 = alpha * alpha;
    let (b1, c1) = (-e2, e4);
    let (b2, c2) = (2.0 * a2 + 1.0, a2 * a2 + a2 + 1.0);
    let ratio = |mu: f64| (mu * mu + b1 * mu + c1) / (mu * mu + b2 * mu + c2);
    let mut best = ratio(0.0).min(1.0);
    let (qa, qb, qc) = (b2 - b1, 2.0 * (c2 - c1), b1 * c2 - b2 * c1);
    let mut cands = Vec::new();
    if qa.abs() < 1e-300 {
        if qb != 0.0 {
            cands.push(-qc / qb);
        }
    } else {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc >= 0.0 {
            let r = disc.sqrt();
            cands.push((-qb + r) / (2.0 * qa));
            cands.push((-qb - r) / (2.0 * qa));
        }
    }
    for mu in cands {
        if mu >= 0.0 {
            best = best.min(ratio(mu));
        }
    }
    best
}

fn weighted_dot(a: &[f64], b: &[f64], w: &GridFunction, alpha: f64) -> f64 {
    let g = w.grid;
    let n = a.len();
    let h = g.h();
    (0..n)
        .map(|i| {
            let t = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            t * h * (-2.0 * alpha * g.s(i)).exp() * a[i] * b[i]
        })
        .sum()
}

/// Discrete `((w, P(D)w)_α, |w|²_{2,α})` for `w` supported in the grid interior.
pub fn quadratic_form_check(p: &PolynomialOperator, alpha: f64, w: &GridFunction) -> Result<(f64, f64)> {
    if !w.vanishes_near_edges(SUPPORT_MARGIN) {
        return Err(Error::SupportTouchesBoundary);
    }
    let pw = p.apply(w)?;
    let lhs = weighted_dot(&w.values, &pw.values, w, alpha);
    let mut rhs = weighted_dot(&w.values, &w.values, w, alpha);
    for j in 1..=2 {
        let d = d_derivative(w, j)?;
        rhs += weighted_dot(&d.values, &d.values, w, alpha);
    }
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::LogGrid;
    use crate::polyops::shifted_pair;
    use proptest::prelude::*;

    #[test]
    fn symbol_examples() {
        let q = PolynomialOperator::q();
        for xi in [0.0f64, 0.3, 1.7, 5.0] {
            let e: f64 = xi * xi + f64::powi(xi, 4);
            assert!((symbol(&q, 1.0, xi) - e).abs() < 1e-12 * (1.0 + e));
        }
        let z = PolynomialOperator::from_roots([0.0; 4]);
        assert_eq!(symbol(&z, 0.0, 1.5), 1.5f64.powi(4));
        assert!((symbol(&PolynomialOperator::p(), 0.5, 0.0) - 3.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn closed_form_ranges() {
        let r = range_closed_form(&PolynomialOperator::p());
        assert_eq!(r.len(), 1);
        assert!((r[0].lo - (0.75 - 0.25 * (11.0f64 / 3.0).sqrt())).abs() < 1e-12);
        assert_eq!(r[0].hi, 1.0);
        let r = range_closed_form(&PolynomialOperator::p_tilde());
        assert!((r[0].lo - (1.0 - 3f64.sqrt().recip())).abs() < 1e-12);
        assert!((r[0].hi - (1.0 + 3f64.sqrt().recip())).abs() < 1e-12);
        assert_eq!(range_closed_form(&PolynomialOperator::q_tilde()), vec![Interval::new(1.0, 2.0)]);
        assert!(range_closed_form(&PolynomialOperator::q()).is_empty());
    }

    #[test]
    fn closed_form_composites() {
        let a = composite_range(Composite::ATilde, RangeMethod::ClosedForm).unwrap();
        assert_eq!(a.len(), 1);
        assert!(a[0].lo.abs() < 1e-12 && (a[0].hi - 1.0).abs() < 1e-12);
        let c = composite_range(Composite::ACheck, RangeMethod::ClosedForm).unwrap();
        assert!((c[0].lo - (1.0 - (5.0f64 / 6.0).sqrt())).abs() < 1e-12);
        assert!((c[0].hi - 1.5).abs() < 1e-12);
        assert!(composite_range(Composite::A, RangeMethod::ClosedForm).unwrap().is_empty());
        let pts = composite_nonnegative_points(Composite::A, -1.0, 1.0, 2001);
        assert!(!pts.is_empty() && pts.iter().all(|a| a.abs() < 1e-9));
    }

    #[test]
    fn numeric_matches_closed_form_where_sharp() {
        let r = range_numeric(&PolynomialOperator::q_tilde(), 0.0, 3.0, 3001).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r[0].lo - 1.0).abs() < 1e-6 && (r[0].hi - 2.0).abs() < 1e-6);
        let r = range_numeric(&PolynomialOperator::p(), 0.0, 1.5, 1501).unwrap();
        assert!((r[0].hi - 1.0).abs() < 1e-6);
    }

    #[test]
    fn closed_form_is_contained_in_numeric() {
        let mut polys: Vec<PolynomialOperator> =
            PolynomialOperator::canonical().iter().map(|(_, p)| *p).collect();
        for k in 0..=3 {
            let (pk, qk) = shifted_pair(k);
            polys.push(pk);
            polys.push(qk);
        }
        for p in polys {
            let rep = CoercivityReport::new(&p).unwrap();
            for iv in &rep.closed_form {
                let mid = 0.5 * (iv.lo + iv.hi);
                assert!(rep.margin(mid) > 0.0);
                assert!(rep.numeric.iter().any(|n| n.lo <= iv.lo + 1e-6 && n.hi >= iv.hi - 1e-6));
            }
        }
    }

    #[test]
    fn numeric_intervals_have_positive_margin_inside_and_not_outside() {
        for (_, p) in PolynomialOperator::canonical() {
            let rep = CoercivityReport::new(&p).unwrap();
            for i in 0..=800 {
                let a = -2.0 + 0.01 * i as f64;
                let inside = rep.numeric.iter().any(|iv| iv.contains(a));
                let near_edge = rep.numeric.iter().any(|iv| (a - iv.lo).abs() < 1e-4 || (a - iv.hi).abs() < 1e-4);
                if near_edge {
                    continue;
                }
                if inside {
                    assert!(rep.margin(a) > 0.0);
                } else {
                    assert!(rep.margin(a) <= ZERO_MARGIN);
                }
            }
        }
    }

    #[test]
    fn scan_too_coarse_is_rejected() {
        assert!(range_numeric(&PolynomialOperator::p(), 0.0, 1.0, 10).is_err());
    }

    #[test]
    fn coercivity_constant_bounds_symbol_ratio() {
        let p = PolynomialOperator::p_tilde();
        let c = coercivity_constant(&p, 0.75);
        assert!(c > 0.0);
        for i in 0..2000 {
            let mu = 0.01 * i as f64;
            let a2 = 0.5625;
            let den = 1.0 + (mu + a2) + (mu + a2) * (mu + a2);
            let num = symbol(&p, 0.75, mu.sqrt());
            assert!(num / den >= c - 1e-12);
        }
    }

    fn bump_grid(center: f64, width: f64) -> GridFunction {
        let g = LogGrid::new(-8.0, 6.0, 1025).unwrap();
        g.sample_s(|s| (-((s - center) / width).powi(2)).exp() * if ((s - center) / width).abs() < 6.0 { 1.0 } else { 0.0 })
    }

    #[test]
    fn quadratic_form_positive_for_p_tilde() {
        let p = PolynomialOperator::p_tilde();
        let w = bump_grid(-1.0, 0.7);
        let (lhs, rhs) = quadratic_form_check(&p, 0.75, &w).unwrap();
        let c = coercivity_constant(&p, 0.75);
        assert!(lhs >= 0.95 * c * rhs, "{lhs} {rhs} {c}");
    }

    #[test]
    fn quadratic_form_of_q_at_one_is_exact_sum() {
        let q = PolynomialOperator::q();
        let w = bump_grid(0.5, 0.8);
        let (lhs, _) = quadratic_form_check(&q, 1.0, &w).unwrap();
        let d1 = d_derivative(&w, 1).unwrap().axpby(1.0, &w, -1.0).unwrap();
        let d2 = d_derivative(&d1, 1).unwrap().axpby(1.0, &d1, -1.0).unwrap();
        let s = weighted_dot(&d1.values, &d1.values, &w, 1.0) + weighted_dot(&d2.values, &d2.values, &w, 1.0);
        assert!(lhs >= s - 1e-6 * s);
    }

    #[test]
    fn quadratic_form_edge_cases() {
        let g = LogGrid::new(-8.0, 6.0, 257).unwrap();
        assert_eq!(quadratic_form_check(&PolynomialOperator::p(), 0.5, &g.zeros()).unwrap(), (0.0, 0.0));
        let w = g.sample(|_| 1.0);
        assert_eq!(
            quadratic_form_check(&PolynomialOperator::p(), 0.5, &w).unwrap_err(),
            Error::SupportTouchesBoundary
        );
    }

    proptest! {
        #[test]
        fn symbol_equals_real_part_of_complex_product(
            r in proptest::array::uniform4(-4.0f64..4.0),
            alpha in -3.0f64..3.0,
            xi in -5.0f64..5.0,
        ) {
            let p = PolynomialOperator::from_roots(r);
            let (mut re, mut im) = (1.0f64, 0.0f64);
            for g in p.roots() {
                let (a, b) = (alpha - g, xi);
                let nre = re * a - im * b;
                im = re * b + im * a;
                re = nre;
            }
            let scale = p.roots().iter().map(|g| (alpha - g).abs() + xi.abs()).product::<f64>();
            prop_assert!((symbol(&p, alpha, xi) - re).abs() <= 1e-12 * scale.max(1.0));
        }

        #[test]
        fn ranges_translate_with_roots(c in -2.0f64..2.0) {
            let p = PolynomialOperator::p();
            let ps = p.shifted(c);
            let a = range_closed_form(&p);
            let b = range_closed_form(&ps);
            prop_assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(&b) {
                prop_assert!(x.shifted(c).distance(y) < 1e-12);
            }
            let na = range_numeric(&p, -3.0, 4.0, 2001).unwrap();
            let nb = range_numeric(&ps, -3.0 + c, 4.0 + c, 2001).unwrap();
            prop_assert_eq!(na.len(), nb.len());
            for (x, y) in na.iter().zip(&nb) {
                prop_assert!(x.shifted(c).distance(y) < 1e-6);
            }
        }
    }
}
