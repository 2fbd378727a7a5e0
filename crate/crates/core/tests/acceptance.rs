//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_DEFECTS` are expected to fail for documented
//! reasons; the process exits nonzero only on unexpected failures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::{Duration, Instant};
use tfstab::coercivity::{composite_range, range_closed_form, range_numeric, Interval, RangeMethod, DEFAULT_SCAN};
use tfstab::elliptic::{apply_b, apply_b_inverse, apply_s, hardy_check, HardyVariant};
use tfstab::evolution::{run, EvolutionConfig};
use tfstab::grid::{composite_init, contact_line_coefficients, weighted_norm, CompositeParams};
use tfstab::nonlinear::{eval_n, run_nonlinear, NonlinearConfig, NonlinearRun};
use tfstab::polyops::{integrate_coefficients, monomial_action};
use tfstab::resolvent::{far_field_s_max, manufactured_rhs, solve, DiscreteOperator};
use tfstab::validation::{film_refinement, special_solution_suite};
use tfstab::{CoefficientVector, Composite, GridFunction, LogGrid, NormSpec, PolynomialOperator, Result};

/// Criteria expected to fail, with the reason.
const KNOWN_DEFECTS: &[(u32, &str)] = &[
    (1, "closed-form ranges are sufficient conditions; the exact numeric ranges are wider"),
    (4, "stated Hardy constants exceed the sharp constants for some weights"),
];

struct Outcome {
    pass: bool,
    detail: String,
}

fn op(s_min: f64, s_max: f64, n: usize) -> Result<DiscreteOperator> {
    DiscreteOperator::assemble(LogGrid::new(s_min, s_max, n)?)
}

fn weight(x: f64) -> f64 {
    x * (3.0 * x + 2.0)
}

fn max_endpoint_err(got: &[Interval], want: &[(f64, f64)]) -> f64 {
    if got.len() != want.len() {
        return f64::INFINITY;
    }
    got.iter()
        .zip(want)
        .map(|(g, w)| (g.lo - w.0).abs().max((g.hi - w.1).abs()))
        .fold(0.0, f64::max)
}

fn c1() -> Result<Outcome> {
    let s3 = 3f64.sqrt();
    let cases: [(&str, Vec<Interval>, Vec<Interval>, (f64, f64)); 5] = [
        {
            let p = PolynomialOperator::p();
            let (lo, hi, n) = DEFAULT_SCAN;
            ("p", range_closed_form(&p), range_numeric(&p, lo, hi, n)?, (0.75 - 0.25 * (11f64 / 3.0).sqrt(), 1.0))
        },
        {
            let p = PolynomialOperator::p_tilde();
            let (lo, hi, n) = DEFAULT_SCAN;
            ("p_tilde", range_closed_form(&p), range_numeric(&p, lo, hi, n)?, (1.0 - 1.0 / s3, 1.0 + 1.0 / s3))
        },
        {
            let p = PolynomialOperator::q_tilde();
            let (lo, hi, n) = DEFAULT_SCAN;
            ("q_tilde", range_closed_form(&p), range_numeric(&p, lo, hi, n)?, (1.0, 2.0))
        },
        (
            "A_tilde",
            composite_range(Composite::ATilde, RangeMethod::ClosedForm)?,
            composite_range(Composite::ATilde, RangeMethod::Numeric)?,
            (0.0, 1.0),
        ),
        (
            "A_check",
            composite_range(Composite::ACheck, RangeMethod::ClosedForm)?,
            composite_range(Composite::ACheck, RangeMethod::Numeric)?,
            (1.0 - (5f64 / 6.0).sqrt(), 1.5),
        ),
    ];
    let mut closed_ok = true;
    let mut numeric_ok = true;
    let mut parts = Vec::new();
    for (name, closed, numeric, want) in &cases {
        let ec = max_endpoint_err(closed, &[*want]);
        let en = max_endpoint_err(numeric, &[*want]);
        closed_ok &= ec <= 1e-9;
        numeric_ok &= en <= 1e-3;
        parts.push(format!("{name}: closed {ec:.1e}, numeric {en:.2e}"));
    }
    Ok(Outcome {
        pass: closed_ok && numeric_ok,
        detail: format!("closed forms {} / numeric {}; {}", ok(closed_ok), ok(numeric_ok), parts.join("; ")),
    })
}

fn c2() -> Result<Outcome> {
    let (p3, q3) = monomial_action(3);
    let symbolic = p3 == 18.0 && q3 == 12.0;
    let o = op(-12.0, 4.0, 2049)?;
    let g = o.grid;
    let a = o.apply(&g.sample(|x| x.powi(3)))?;
    let r = o.interior();
    let err = a.rel_error_range(&g.sample(|x| 18.0 * x * x + 12.0 * x), r.start, r.end)?;
    let mut min_order = f64::INFINITY;
    for p in [1, 2] {
        let errs = [65, 129, 257]
            .iter()
            .map(|&n| {
                let o = op(-4.0, 2.0, n)?;
                let scale = o.apply(&o.grid.sample(|x| x.powi(3)))?.max_abs();
                Ok(o.apply(&o.grid.sample(|x| x.powi(p)))?.max_abs() / scale)
            })
            .collect::<Result<Vec<f64>>>()?;
        min_order = min_order.min((errs[0] / errs[1]).log2()).min((errs[1] / errs[2]).log2());
    }
    Ok(Outcome {
        pass: symbolic && err <= 1e-6 && min_order >= 3.5,
        detail: format!("monomial_action(3) = ({p3}, {q3}); discrete rel err {err:.2e}; kernel order {min_order:.2}"),
    })
}

fn c3() -> Result<Outcome> {
    let g = LogGrid::new(-12.0, 4.0, 2049)?;
    let (lo, hi) = (16, g.n - 16);
    let mut worst_b = 0.0f64;
    let u = apply_b_inverse(&g.sample(|x| x.powi(4) + 3.0 * x.powi(3)))?;
    worst_b = worst_b.max(u.rel_error_range(&g.sample(|x| x.powi(3)), lo, hi)?);
    let u = apply_b_inverse(&g.sample(|x| 2.0 * x * x))?;
    worst_b = worst_b.max(u.rel_error_range(&g.sample(|x| x * x), lo, hi)?);
    for w in [g.sample(|x| x.powi(3)), g.sample(|x| x * x)] {
        let bw = apply_b(&w)?;
        worst_b = worst_b.max(apply_b(&apply_b_inverse(&bw)?)?.rel_error_range(&bw, lo, hi)?);
    }
    for w in [g.sample(|x| x * x * (-x).exp()), g.sample(|x| x.powi(3) * (-x).exp())] {
        worst_b = worst_b.max(apply_b_inverse(&apply_b(&w)?)?.rel_error_range(&w, lo, hi)?);
    }
    // B⁻¹ of decaying data tends to c(x+1)², the kernel of B; B then cancels a
    // function of size x² at the right edge.
    let f = g.sample(|x| x * x * (-x).exp());
    let info = apply_b(&apply_b_inverse(&f)?)?.rel_error_range(&f, lo, hi)?;
    let mut worst_ladder = 0.0f64;
    for j in 1..=6 {
        let jf = j as f64;
        let f = g.sample(|x| (jf - 2.0) * x.powi(j + 1) + jf * x.powi(j));
        let u = apply_b_inverse(&f)?;
        worst_ladder = worst_ladder.max(u.rel_error_range(&g.sample(|x| x.powi(j)), lo, hi)?);
    }
    let s = apply_s(&f)?;
    let s_err = Composite::A.apply(&s)?.rel_error_range(&f, lo, hi)?;
    Ok(Outcome {
        pass: worst_b <= 1e-6 && worst_ladder <= 1e-6 && s_err <= 1e-4,
        detail: format!("B round trips {worst_b:.2e}; ladder j=1..6 {worst_ladder:.2e}; S round trip {s_err:.2e}; info: B(B^-1 x^2 e^-x) {info:.2e}"),
    })
}

fn bump(g: &LogGrid, c: f64, w: f64) -> GridFunction {
    g.sample_s(|s| {
        let z = (s - c) / w;
        if z.abs() < 1.0 {
            (-1.0 / (1.0 - z * z)).exp()
        } else {
            0.0
        }
    })
}

fn c4() -> Result<Outcome> {
    let g = LogGrid::new(-10.0, 10.0, 2049)?;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut stated, mut sharp, mut total) = (0usize, 0usize, 0usize);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let w = bump(&g, rng.random_range(-3.0..3.0), rng.random_range(0.2..6.0));
        for gamma in [0.3, 0.8, 1.2] {
            for v in HardyVariant::ALL {
                let h = hardy_check(&w, gamma, v)?;
                total += 1;
                if !h.holds(1e-10) {
                    stated += 1;
                    worst = worst.max(1.0 - h.lhs / (h.constant * h.rhs));
                }
                if h.lhs < h.sharp_constant * h.rhs * (1.0 - 1e-10) {
                    sharp += 1;
                }
            }
        }
    }
    Ok(Outcome {
        pass: stated == 0,
        detail: format!(
            "stated constants violated in {stated}/{total} (worst shortfall {:.1}%); sharp constants violated in {sharp}/{total}",
            100.0 * worst
        ),
    })
}

fn manufactured_error(s_max: f64, n: usize) -> Result<(f64, Option<f64>)> {
    let o = op(-12.0, s_max, n)?;
    let g = o.grid.sample(|x| manufactured_rhs(1.0, x));
    let r = solve(&o, 1.0, &g)?;
    let u = r.solution.expect("solution kept");
    let exact = o.grid.sample(|x| x * x * (-x).exp());
    let diff = u.sub(&exact)?;
    let l2 = |w: &GridFunction| w.values.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok((l2(&diff) / l2(&exact), r.decay_rate_fit))
}

fn c5() -> Result<Outcome> {
    let s_max = far_field_s_max(1.0, 1e-12);
    let errs = [257, 513, 1025]
        .iter()
        .map(|&n| manufactured_error(s_max, n).map(|e| e.0))
        .collect::<Result<Vec<_>>>()?;
    let order = (errs[0] / errs[1]).log2().min((errs[1] / errs[2]).log2());
    let (fine, _) = manufactured_error(s_max, 4096)?;
    let o = op(-12.0, s_max, 2049)?;
    let rate = solve(&o, 1.0, &o.grid.sample(|x| x * x * (-x).exp()))?.decay_rate_fit;
    let rate_ok = rate.is_some_and(|r| (0.55..=0.85).contains(&r));
    Ok(Outcome {
        pass: order >= 2.0 && fine <= 1e-5 && rate_ok,
        detail: format!(
            "errors [{}], order {order:.2}; L2 at n=4096 {fine:.2e}; tail slope {} (prediction {:.4})",
            sci(&errs),
            rate.map_or("none".into(), |r| format!("{r:.3}")),
            std::f64::consts::FRAC_1_SQRT_2
        ),
    })
}

fn c6() -> Result<Outcome> {
    let o = op(-12.0, 4.0, 1025)?;
    let cfg = EvolutionConfig {
        dt: 1e-2,
        t_end: 2.0,
        alpha: 0.25,
        k: 2,
    };
    let u0 = o.grid.sample(|x| x.powi(3) * (-x).exp());
    let st = run(&o, &u0, None, cfg, cfg.monitors())?;
    let steps = st.times.len() - 1;
    let worst0 = st
        .energy_log
        .windows(2)
        .map(|w| (w[1][0] - w[0][0]) / w[0][0])
        .fold(f64::NEG_INFINITY, f64::max);
    let grows_k = st.energy_log.windows(2).filter(|w| w[1][1] > w[0][1]).count();
    let kcfg = EvolutionConfig { t_end: 1.0, ..cfg };
    let solver = o.resolvent(100.0)?;
    let mut kernel_err = 0.0f64;
    for p in [1, 2] {
        let w = o.grid.sample(|x| x.powi(p));
        let mut u = w.clone();
        for _ in 0..kcfg.steps()? {
            u = solver.solve_raw(&u.scale(100.0))?;
        }
        kernel_err = kernel_err.max(u.sub(&w)?.max_abs() / w.max_abs());
    }
    Ok(Outcome {
        pass: steps == 200 && st.flags.is_empty() && worst0 <= 1e-10 && kernel_err <= 1e-8,
        detail: format!(
            "{steps} steps; max relative step change of |(D-1)u|^2_0.25 {worst0:.2e}; flags {}; |D^2(D-1)u|^2 increased on {grows_k} steps (not monotone by itself); kernel drift {kernel_err:.2e}",
            st.flags.len()
        ),
    })
}

fn c7() -> Result<Outcome> {
    let cv = CoefficientVector::unforced(vec![0.0, 0.0, 1.0, 0.0, 0.0]);
    let tr = integrate_coefficients(&cv, |_| vec![0.0; 5], 1e-3, 1.0)?;
    let ode_err = tr
        .times
        .iter()
        .zip(&tr.states)
        .map(|(t, s)| (s.u[0] + 12.0 * t).abs().max((s.u[1] + 18.0 * t).abs()))
        .fold(0.0, f64::max);
    let o = op(-12.0, 4.0, 1025)?;
    let cfg = EvolutionConfig {
        t_end: 0.2,
        ..Default::default()
    };
    let st = run(&o, &o.grid.sample(|x| x.powi(3) * (-x).exp()), None, cfg, vec![])?;
    let rel = st.coefficient_relation(|_| 0.0).into_iter().fold(0.0, f64::max);
    Ok(Outcome {
        pass: ode_err <= 1e-10 && rel <= 1e-2,
        detail: format!("e3 trajectory error {ode_err:.1e}; PDE j=1 relation residual {rel:.2e}"),
    })
}

fn c8() -> Result<Outcome> {
    let g = LogGrid::new(-12.0, 4.0, 1025)?;
    let zero = eval_n(&g.zeros(), 0.5)?.max_abs();
    let shift = [1e-3, -1e-2]
        .iter()
        .map(|&c| eval_n(&g.sample(|x| c * weight(x)), 0.5).map(|n| n.max_abs()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let w = g.sample(|x| weight(x) * x * (-x).exp());
    let ratios = [1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&e| Ok(weighted_norm(&eval_n(&w.scale(e), 0.5)?, NormSpec::new(0, 0.5))? / (e * e)))
        .collect::<Result<Vec<f64>>>()?;
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
    let spread = hi / lo - 1.0;
    Ok(Outcome {
        pass: zero == 0.0 && shift <= 1e-12 && spread <= 0.1,
        detail: format!("N(0) = {zero:.1e}; N(c(3x^2+2x)) = {shift:.1e}; ratios [{}], spread {:.2}%", sci(&ratios), 100.0 * spread),
    })
}

const C9_GRID: (f64, f64, usize) = (-12.0, 4.0, 1025);

fn c9_run() -> Result<NonlinearRun> {
    let o = op(C9_GRID.0, C9_GRID.1, C9_GRID.2)?;
    let u0 = o.grid.sample(|x| 1e-3 * weight(x) * (-x).exp());
    run_nonlinear(&o, &u0, &NonlinearConfig::default())
}

fn c9(run: &NonlinearRun) -> Result<Outcome> {
    let first = run.init_norm[0];
    let last = *run.init_norm.last().expect("non-empty");
    let decay = last < first && last < 0.5 * first;
    let o = op(C9_GRID.0, C9_GRID.1, C9_GRID.2)?;
    let cfg = NonlinearConfig {
        evolution: EvolutionConfig {
            t_end: 1.0,
            ..NonlinearConfig::default().evolution
        },
        ..NonlinearConfig::default()
    };
    let zero = run_nonlinear(&o, &o.grid.zeros(), &cfg)?;
    let drift = zero.state.states.iter().map(GridFunction::max_abs).fold(0.0, f64::max);
    let x0 = o.grid.x(0);
    let mut ident = 0.0f64;
    for (t, u) in run.state.times.iter().zip(&run.state.states) {
        let y0 = 6.0 * t + u.values[0] / weight(x0);
        let c = contact_line_coefficients(u)?;
        ident = ident.max((y0 - 6.0 * t - 0.5 * c[0]).abs());
    }
    let params = CompositeParams {
        n: 1,
        k: 3,
        delta: 0.25,
    };
    let check = composite_init(&run.state.states[0], params)?.value;
    Ok(Outcome {
        pass: decay && (check - first).abs() <= 1e-12 * first && zero.state.states.len() == 101 && drift <= 1e-12 && ident <= 1e-6,
        detail: format!(
            "init-norm {first:.3e} -> {last:.3e} (ratio {:.3}); max Picard sweeps {}; sup|v_x| max {:.2e}; zero data drift {drift:.1e} over 100 steps; contact-line identity {ident:.1e}",
            last / first,
            run.state.picard_iterations.iter().max().copied().unwrap_or(0),
            run.state.lipschitz.iter().copied().fold(0.0, f64::max),
        ),
    })
}

fn c10(run: &NonlinearRun) -> Result<Outcome> {
    let film = film_refinement(run, 250, &[4, 2, 1], &[1.0, 1.5, 2.0])?;
    let specials = special_solution_suite()?;
    let mut parts = vec![format!(
        "film residuals [{}] order {:.2}",
        sci(&film.reports.iter().map(|r| r.max_residual).collect::<Vec<_>>()),
        film.min_order().unwrap_or(f64::NAN)
    )];
    for s in &specials {
        parts.push(match s.min_order() {
            Some(o) => format!("{} order {o:.2}", s.name),
            None => format!("{} exact to rounding", s.name),
        });
    }
    let pass = film.passes() && specials.iter().all(|s| s.passes());
    Ok(Outcome {
        pass,
        detail: parts.join("; "),
    })
}

fn sci(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>().join(", ")
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "fail"
    }
}

fn main() {
    let mut unexpected = Vec::new();
    let mut record = |id: u32, budget: Duration, elapsed: Duration, out: Result<Outcome>| {
        let (pass, detail) = match out {
            Ok(o) => (o.pass && elapsed <= budget, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let known = KNOWN_DEFECTS.iter().find(|k| k.0 == id);
        let tag = match (pass, known) {
            (true, None) => "",
            (true, Some(_)) => " (listed as known defect but passed)",
            (false, Some(_)) => " (known defect)",
            (false, None) => {
                unexpected.push(id);
                ""
            }
        };
        println!(
            "{} criterion {id:>2} [{:.2}s / {}s]{tag}: {detail}",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
        if let (false, Some(k)) = (pass, known) {
            println!("       reason: {}", k.1);
        }
    };
    let timed = |f: &dyn Fn() -> Result<Outcome>| {
        let t = Instant::now();
        let out = f();
        (t.elapsed(), out)
    };
    let table: [(u32, u64, &dyn Fn() -> Result<Outcome>); 8] = [
        (1, 1, &c1),
        (2, 5, &c2),
        (3, 10, &c3),
        (4, 10, &c4),
        (5, 30, &c5),
        (6, 60, &c6),
        (7, 10, &c7),
        (8, 10, &c8),
    ];
    for (id, budget, f) in table {
        let (el, out) = timed(f);
        record(id, Duration::from_secs(budget), el, out);
    }
    let t = Instant::now();
    let run = c9_run();
    let run_time = t.elapsed();
    match run {
        Ok(run) => {
            let (el, out) = timed(&|| c9(&run));
            record(9, Duration::from_secs(300), run_time + el, out);
            let (el, out) = timed(&|| c10(&run));
            record(10, Duration::from_secs(60), el, out);
        }
        Err(e) => {
            record(9, Duration::from_secs(300), run_time, Err(e.clone()));
            record(10, Duration::from_secs(60), Duration::ZERO, Err(e));
        }
    }
    if unexpected.is_empty() {
        println!("acceptance: no unexpected failures");
    } else {
        println!("acceptance: unexpected failures in criteria {unexpected:?}");
        std::process::exit(1);
    }
}
