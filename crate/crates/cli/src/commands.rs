//! Experiment drivers behind the subcommands. Each returns the text printed
//! on stdout and writes its artifacts through an [`ArtifactWriter`].

use crate::artifacts::{num, ArtifactWriter};
use crate::config::ExperimentConfig;
use crate::error::CliError;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use std::fmt::Write as _;
use std::path::Path;
use tfstab::coercivity::{composite_range, CoercivityReport, Interval, RangeMethod};
use tfstab::evolution::{self, EnergyFlag};
use tfstab::grid::{composite_init, weighted_norm};
use tfstab::nonlinear::{reconstruct, run_nonlinear, NonlinearRun};
use tfstab::resolvent::{manufactured_rhs, solve, DiscreteOperator};
use tfstab::validation::{film_refinement, special_solution_suite, tw_ode_check, RefinementStudy};
use tfstab::{Composite, GridFunction, LogGrid, NormSpec, PolynomialOperator};

/// Environment variable overriding the sweep worker count.
pub const WORKERS_ENV: &str = "TFSTAB_WORKERS";

/// Relative tolerance when matching sampled nodes to a uniform grid in `s`.
const NODE_TOL: f64 = 1e-9;

/// Film snapshots sample `y = 6t + i·FILM_DY` for `i` in `FILM_RANGE`.
const FILM_DY: f64 = 0.01;
const FILM_RANGE: std::ops::RangeInclusive<i32> = -50..=500;

/// Tolerance of the traveling-wave ODE check.
const TW_ODE_TOL: f64 = 1e-9;
/// Stencil strides and offsets of the film oracle.
const FILM_STRIDES: [usize; 3] = [4, 2, 1];
const FILM_OFFSETS: [f64; 3] = [1.0, 1.5, 2.0];

fn fixed(v: f64) -> String {
    if v.is_finite() {
        // Avoid printing `-0.000000`.
        let v = if v.abs() < 5e-7 { 0.0 } else { v };
        format!("{v:.6}")
    } else {
        format!("{v}")
    }
}

fn intervals(list: &[Interval]) -> String {
    if list.is_empty() {
        return "empty".into();
    }
    list.iter()
        .map(|i| format!("({}, {})", fixed(i.lo), fixed(i.hi)))
        .collect::<Vec<_>>()
        .join(" U ")
}

fn discrepancy(a: &[Interval], b: &[Interval]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).map(|(x, y)| x.distance(y)).fold(0.0, f64::max)
}

/// One row of the coercivity table.
#[derive(Debug, Clone, Serialize)]
pub struct CoercivityRow {
    pub name: String,
    pub mean: Option<f64>,
    pub sigma: Option<f64>,
    pub closed_form: Vec<Interval>,
    pub numeric: Vec<Interval>,
    /// `None` when the interval counts differ.
    pub max_discrepancy: Option<f64>,
}

/// Closed-form and numeric ranges of the canonical polynomials and the
/// composite operators.
pub fn coercivity_table() -> Result<Vec<CoercivityRow>, CliError> {
    let finite = |d: f64| d.is_finite().then_some(d);
    let mut rows = Vec::new();
    for (name, p) in PolynomialOperator::canonical() {
        let r = CoercivityReport::new(&p)?;
        rows.push(CoercivityRow {
            name: name.into(),
            mean: Some(r.mean),
            sigma: Some(r.sigma),
            max_discrepancy: finite(r.max_discrepancy()),
            closed_form: r.closed_form,
            numeric: r.numeric,
        });
    }
    for c in [Composite::A, Composite::ATilde, Composite::ACheck] {
        let closed = composite_range(c, RangeMethod::ClosedForm)?;
        let numeric = composite_range(c, RangeMethod::Numeric)?;
        rows.push(CoercivityRow {
            name: c.name().into(),
            mean: None,
            sigma: None,
            max_discrepancy: finite(discrepancy(&closed, &numeric)),
            closed_form: closed,
            numeric,
        });
    }
    Ok(rows)
}

/// `coercivity`: prints the range table and writes `coercivity.csv`.
pub fn coercivity(w: &mut ArtifactWriter) -> Result<String, CliError> {
    let rows = coercivity_table()?;
    let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), fixed);
    let mut out = format!(
        "{:<8} {:>9} {:>9}  {:<44} {:<44} {}\n",
        "name", "m", "sigma", "closed form", "numeric", "max discrepancy"
    );
    for r in &rows {
        let _ = writeln!(
            out,
            "{:<8} {:>9} {:>9}  {:<44} {:<44} {}",
            r.name,
            opt(r.mean),
            opt(r.sigma),
            intervals(&r.closed_form),
            intervals(&r.numeric),
            r.max_discrepancy.map_or_else(|| "interval count differs".into(), |d| format!("{d:.3e}")),
        );
    }
    let csv_rows = rows.iter().map(|r| {
        vec![
            r.name.clone(),
            r.mean.map_or_else(String::new, num),
            r.sigma.map_or_else(String::new, num),
            interval_field(&r.closed_form),
            interval_field(&r.numeric),
            r.max_discrepancy.map_or_else(|| "inf".into(), num),
        ]
    });
    w.write_csv(
        "coercivity.csv",
        &["name", "m", "sigma", "closed_form", "numeric", "max_discrepancy"],
        csv_rows,
    )?;
    Ok(out)
}

fn interval_field(list: &[Interval]) -> String {
    list.iter()
        .map(|i| format!("{}:{}", num(i.lo), num(i.hi)))
        .collect::<Vec<_>>()
        .join(";")
}

/// Reads a two-column CSV (`s` or `x`, then values) sampled on a uniform
/// grid in `s`. Lines starting with `#` are skipped.
pub fn read_sampled(path: &Path) -> Result<GridFunction, CliError> {
    let input = |m: String| CliError::Input(format!("{}: {m}", path.display()));
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| input(e.to_string()))?;
    let headers = rdr.headers().map_err(|e| input(e.to_string()))?.clone();
    let in_x = match headers.get(0) {
        Some("s") => false,
        Some("x") => true,
        other => return Err(input(format!("first column must be `s` or `x`, got {other:?}"))),
    };
    if headers.len() < 2 {
        return Err(input("need a value column".into()));
    }
    let (mut s, mut vals) = (Vec::new(), Vec::new());
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| input(e.to_string()))?;
        let field = |j: usize| -> Result<f64, CliError> {
            rec.get(j)
                .and_then(|f| f.parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .ok_or_else(|| input(format!("row {}: column {j} is not a finite number", line + 1)))
        };
        let a = field(0)?;
        if in_x && !(a > 0.0) {
            return Err(input(format!("row {}: x must be positive", line + 1)));
        }
        s.push(if in_x { a.ln() } else { a });
        vals.push(field(1)?);
    }
    let n = s.len();
    if n < 2 {
        return Err(input(format!("need at least 2 rows, got {n}")));
    }
    let grid = LogGrid::new(s[0], s[n - 1], n)?;
    for (i, &si) in s.iter().enumerate() {
        if (si - grid.s(i)).abs() > NODE_TOL * grid.h().max(si.abs()) {
            return Err(input(format!("row {}: nodes are not uniform in s", i + 1)));
        }
    }
    Ok(GridFunction::new(grid, vals)?)
}

/// `norms`: weighted norms for every configured `α` and `k ≤ norms.k`, plus
/// the composite initial-data norm.
pub fn norms(cfg: &ExperimentConfig, w: &mut ArtifactWriter, input: Option<&Path>) -> Result<String, CliError> {
    let f = match input {
        Some(p) => read_sampled(p)?,
        None => cfg.perturbation(&cfg.log_grid()?),
    };
    let mut weighted = Vec::new();
    for &alpha in &cfg.norms.alphas {
        for k in 0..=cfg.norms.k {
            weighted.push(json!({ "k": k, "alpha": alpha, "value": weighted_norm(&f, NormSpec::new(k, alpha))? }));
        }
    }
    let data = json!({
        "source": input.map_or_else(|| "config perturbation".to_string(), |p| p.display().to_string()),
        "weighted": weighted,
        "composite_init": composite_init(&f, cfg.composite())?,
    });
    w.write_json("norms.json", &data)?;
    Ok(serde_json::to_string_pretty(&data)? + "\n")
}

fn on_grid(g: &GridFunction, grid: &LogGrid) -> Result<GridFunction, CliError> {
    let same = g.grid.n == grid.n
        && (g.grid.s(0) - grid.s(0)).abs() <= NODE_TOL * grid.h().max(grid.s(0).abs())
        && (g.grid.s(grid.n - 1) - grid.s(grid.n - 1)).abs() <= NODE_TOL * grid.h().max(grid.s(grid.n - 1).abs());
    if !same {
        return Err(CliError::Input(format!(
            "sampled right-hand side does not match grid [{}, {}] with n = {}",
            grid.s(0),
            grid.s(grid.n - 1),
            grid.n
        )));
    }
    Ok(GridFunction::new(*grid, g.values.clone())?)
}

/// `resolvent`: solves `(λ + 𝒜)u = g` for `--lambda` or every configured
/// `λ`. Without `--g` the right-hand side is manufactured from `x²e^{-x}`
/// and the error against it is reported.
pub fn resolvent(
    cfg: &ExperimentConfig,
    w: &mut ArtifactWriter,
    lambda: Option<f64>,
    g_path: Option<&Path>,
) -> Result<String, CliError> {
    let lambdas = match lambda {
        Some(l) if l > 0.0 && l.is_finite() => vec![l],
        Some(l) => {
            return Err(CliError::Config {
                key: "lambda".into(),
                reason: format!("must be positive and finite, got {l}"),
            })
        }
        None => cfg.solver.lambdas.clone(),
    };
    let grid = cfg.log_grid()?;
    let op = DiscreteOperator::assemble(grid)?;
    let given = g_path.map(read_sampled).transpose()?.map(|g| on_grid(&g, &grid)).transpose()?;
    let exact = grid.sample(|x| x * x * (-x).exp());
    let mut out = String::new();
    let mut reports = Vec::new();
    for (i, &l) in lambdas.iter().enumerate() {
        let g = given.clone().unwrap_or_else(|| grid.sample(|x| manufactured_rhs(l, x)));
        let r = solve(&op, l, &g)?;
        let u = r.solution.clone().expect("solve keeps the solution");
        let error = given.is_none().then(|| l2_relative(&u, &exact));
        let rows = (0..grid.n).map(|j| vec![num(grid.s(j)), num(grid.x(j)), num(g.values[j]), num(u.values[j])]);
        let file = format!("resolvent_{i}.csv");
        w.write_csv(&file, &["s", "x", "g", "u"], rows)?;
        let _ = writeln!(
            out,
            "lambda = {l}: residual {:.3e}, decay rate {}, u1..u3 = {:?}{}",
            r.residual_norm,
            r.decay_rate_fit.map_or_else(|| "n/a".into(), |d| format!("{d:.4}")),
            r.coefficients,
            error.map_or_else(String::new, |e| format!(", relative L2 error {e:.3e}")),
        );
        reports.push(json!({ "file": file, "solve": r, "manufactured_error": error }));
    }
    w.write_json("resolvent.json", &reports)?;
    Ok(out)
}

fn l2_relative(u: &GridFunction, exact: &GridFunction) -> f64 {
    let d: f64 = u.values.iter().zip(&exact.values).map(|(a, b)| (a - b) * (a - b)).sum();
    let e: f64 = exact.values.iter().map(|b| b * b).sum();
    (d / e).sqrt()
}

fn snapshot_steps(times: &[f64], requested: &[f64], default_ends: bool) -> Vec<usize> {
    let mut steps: Vec<usize> = if requested.is_empty() {
        if default_ends {
            vec![0, times.len() - 1]
        } else {
            Vec::new()
        }
    } else {
        requested
            .iter()
            .map(|&t| {
                (0..times.len())
                    .min_by(|&a, &b| (times[a] - t).abs().total_cmp(&(times[b] - t).abs()))
                    .expect("non-empty trajectory")
            })
            .collect()
    };
    steps.sort_unstable();
    steps.dedup();
    steps
}

/// `linear-evolve`: implicit Euler for `u_t + 𝒜u = 0` from the configured
/// perturbation.
pub fn linear_evolve(cfg: &ExperimentConfig, w: &mut ArtifactWriter) -> Result<String, CliError> {
    let grid = cfg.log_grid()?;
    let op = DiscreteOperator::assemble(grid)?;
    let ec = cfg.evolution();
    let st = evolution::run(&op, &cfg.perturbation(&grid), None, ec, ec.monitors())?;
    let mut header = vec!["t".to_string()];
    header.extend(st.monitors.iter().map(|m| format!("energy_k{}", m.k)));
    header.extend(["u1", "u2", "u3"].map(String::from));
    let rows = (0..st.times.len()).map(|j| {
        let mut r = vec![num(st.times[j])];
        r.extend(st.energy_log[j].iter().map(|&e| num(e)));
        r.extend(st.coefficient_tracks[j].iter().map(|&c| num(c)));
        r
    });
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    w.write_csv("linear_trajectory.csv", &header_refs, rows)?;
    for j in snapshot_steps(&st.times, &cfg.nonlinear.snapshot_times, false) {
        let u = &st.states[j];
        let rows = (0..grid.n).map(|i| vec![num(grid.s(i)), num(grid.x(i)), num(u.values[i])]);
        w.write_csv(&format!("linear_snapshot_{j}.csv"), &["s", "x", "u"], rows)?;
    }
    let first = &st.energy_log[0];
    let last = st.energy_log.last().expect("initial state recorded");
    let flags: &[EnergyFlag] = &st.flags;
    w.write_json(
        "linear_summary.json",
        &json!({
            "steps": st.times.len() - 1,
            "monitors": st.monitors,
            "initial_energies": first,
            "final_energies": last,
            "final_coefficients": st.coefficient_tracks.last(),
            "energy_flags": flags,
        }),
    )?;
    let mut out = format!("linear evolution: {} steps of dt = {}\n", st.times.len() - 1, ec.dt);
    for (m, spec) in st.monitors.iter().enumerate() {
        let _ = writeln!(out, "energy k = {}: {:.6e} -> {:.6e}", spec.k, first[m], last[m]);
    }
    let _ = writeln!(out, "energy flags: {}", flags.len());
    Ok(out)
}

/// Runs the nonlinear evolution of the configured perturbation.
pub fn nonlinear_run(cfg: &ExperimentConfig) -> Result<NonlinearRun, CliError> {
    let grid = cfg.log_grid()?;
    let op = DiscreteOperator::assemble(grid)?;
    Ok(run_nonlinear(&op, &cfg.perturbation(&grid), &cfg.nonlinear_config())?)
}

/// `nonlinear-evolve`: trajectory CSV and film snapshots.
pub fn nonlinear_evolve(cfg: &ExperimentConfig, w: &mut ArtifactWriter) -> Result<String, CliError> {
    let run = nonlinear_run(cfg)?;
    let st = &run.state;
    let rows = (0..st.times.len()).map(|j| {
        let c = st.coefficient_tracks[j];
        vec![
            num(st.times[j]),
            num(run.init_norm[j]),
            num(c[0]),
            num(c[1]),
            num(st.lipschitz[j]),
            num(st.contact_line[j]),
            st.picard_iterations[j].to_string(),
        ]
    });
    w.write_csv(
        "nonlinear_trajectory.csv",
        &["t", "init_norm", "u1", "u2", "sup_vx", "y0", "picard"],
        rows,
    )?;
    let mut films = Vec::new();
    for j in snapshot_steps(&st.times, &cfg.nonlinear.snapshot_times, true) {
        let t = st.times[j];
        let ys: Vec<f64> = FILM_RANGE.map(|i| 6.0 * t + i as f64 * FILM_DY).collect();
        let film = reconstruct(&st.states[j], t, &ys)?;
        let file = format!("film_{j}.csv");
        w.write_csv(&file, &["y", "h"], film.samples.iter().map(|&(y, h)| vec![num(y), num(h)]))?;
        films.push(json!({ "file": file, "step": j, "t": t, "contact_line": film.contact_line }));
    }
    let n0 = run.init_norm[0];
    let n1 = *run.init_norm.last().expect("initial state recorded");
    let ratio = (n0 > 0.0).then(|| n1 / n0);
    let picard_max = st.picard_iterations.iter().copied().max().unwrap_or(0);
    let sup_vx = st.lipschitz.iter().copied().fold(0.0, f64::max);
    w.write_json(
        "nonlinear_summary.json",
        &json!({
            "steps": st.times.len() - 1,
            "init_norm_initial": n0,
            "init_norm_final": n1,
            "init_norm_ratio": ratio,
            "picard_max": picard_max,
            "sup_vx_max": sup_vx,
            "final_coefficients": st.coefficient_tracks.last(),
            "energy_flags": st.flags,
            "films": films,
        }),
    )?;
    Ok(format!(
        "nonlinear evolution: {} steps of dt = {}\ninit norm: {:.6e} -> {:.6e}{}\nmax Picard sweeps: {}\nmax sup|v_x|: {:.3e}\n",
        st.times.len() - 1,
        st.config.dt,
        n0,
        n1,
        ratio.map_or_else(String::new, |r| format!(" (ratio {r:.4})")),
        picard_max,
        sup_vx
    ))
}

/// One oracle of the `validate` report.
#[derive(Debug, Clone, Serialize)]
pub struct OracleCheck {
    pub name: String,
    pub passed: bool,
    pub detail: serde_json::Value,
}

fn study_check(s: RefinementStudy) -> OracleCheck {
    OracleCheck {
        name: s.name.clone(),
        passed: s.passes(),
        detail: json!({ "exact": s.exact, "min_order": s.min_order(), "study": s }),
    }
}

/// Runs the oracle suite: exact solutions, the traveling-wave ODE, and the
/// residual of the film reconstructed from a nonlinear run at mid-time.
pub fn oracle_suite(cfg: &ExperimentConfig) -> Result<Vec<OracleCheck>, CliError> {
    let mut checks: Vec<OracleCheck> = special_solution_suite()?.into_iter().map(study_check).collect();
    let err = tw_ode_check(6.0, 1.0, &[0.1, 1.0, 5.0])?;
    checks.push(OracleCheck {
        name: "traveling_wave_ode".into(),
        passed: err <= TW_ODE_TOL,
        detail: json!({ "max_error": err, "tolerance": TW_ODE_TOL }),
    });
    let run = nonlinear_run(cfg)?;
    let step = (run.state.times.len() - 1) / 2;
    checks.push(study_check(film_refinement(&run, step, &FILM_STRIDES, &FILM_OFFSETS)?));
    Ok(checks)
}

/// `validate`: writes `validation.json`; fails with exit code 2 if any
/// oracle fails.
pub fn validate(cfg: &ExperimentConfig, w: &mut ArtifactWriter) -> Result<String, CliError> {
    let checks = oracle_suite(cfg)?;
    let passed = checks.iter().all(|c| c.passed);
    w.write_json("validation.json", &json!({ "passed": passed, "checks": checks }))?;
    let mut out = String::new();
    for c in &checks {
        let _ = writeln!(out, "{} {}", if c.passed { "PASS" } else { "FAIL" }, c.name);
    }
    if passed {
        Ok(out)
    } else {
        print!("{out}");
        let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        Err(CliError::Validation(failed.join(", ")))
    }
}

/// Swept parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    /// Time step of the nonlinear run.
    Dt,
    /// Spectral parameter of the manufactured resolvent problem.
    Lambda,
    /// Perturbation amplitude of the nonlinear run.
    Epsilon,
}

/// Outcome of one sweep run.
#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub value: f64,
    pub metrics: Vec<(String, f64)>,
    #[serde(skip)]
    pub final_state: Vec<f64>,
}

/// Worker count from [`WORKERS_ENV`]; `0` lets rayon decide.
pub fn worker_count() -> Result<usize, CliError> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(0),
        Ok(v) => v.trim().parse::<usize>().ok().filter(|&n| n > 0).ok_or_else(|| CliError::Config {
            key: WORKERS_ENV.into(),
            reason: format!("must be a positive integer, got {v:?}"),
        }),
    }
}

fn sweep_point(cfg: &ExperimentConfig, param: SweepParam, value: f64) -> Result<SweepPoint, CliError> {
    let mut c = cfg.clone();
    match param {
        SweepParam::Dt => c.solver.dt = value,
        SweepParam::Epsilon => c.nonlinear.epsilon = value,
        SweepParam::Lambda => c.solver.lambdas = vec![value],
    }
    c.validate()?;
    if param == SweepParam::Lambda {
        let grid = c.log_grid()?;
        let op = DiscreteOperator::assemble(grid)?;
        let r = solve(&op, value, &grid.sample(|x| manufactured_rhs(value, x)))?;
        let u = r.solution.expect("solve keeps the solution");
        let err = l2_relative(&u, &grid.sample(|x| x * x * (-x).exp()));
        return Ok(SweepPoint {
            value,
            metrics: vec![
                ("residual".into(), r.residual_norm),
                ("relative_l2_error".into(), err),
                ("decay_rate".into(), r.decay_rate_fit.unwrap_or(f64::NAN)),
            ],
            final_state: u.values,
        });
    }
    let run = nonlinear_run(&c)?;
    let st = &run.state;
    let c_final = *st.coefficient_tracks.last().expect("initial state recorded");
    let n0 = run.init_norm[0];
    let n1 = *run.init_norm.last().expect("initial state recorded");
    Ok(SweepPoint {
        value,
        metrics: vec![
            ("u1_final".into(), c_final[0]),
            ("u2_final".into(), c_final[1]),
            ("init_norm_final".into(), n1),
            ("init_norm_ratio".into(), if n0 > 0.0 { n1 / n0 } else { f64::NAN }),
            ("picard_max".into(), st.picard_iterations.iter().copied().max().unwrap_or(0) as f64),
            ("sup_vx_max".into(), st.lipschitz.iter().copied().fold(0.0, f64::max)),
        ],
        final_state: st.last().expect("initial state recorded").values.clone(),
    })
}

/// Observed orders `ln(d_i/d_{i+1}) / ln(h_i/h_{i+1})` from the sup-norm
/// differences `d_i` of consecutive final states.
pub fn richardson_orders(points: &[SweepPoint]) -> Vec<f64> {
    let diffs: Vec<f64> = points
        .windows(2)
        .map(|p| {
            p[0].final_state
                .iter()
                .zip(&p[1].final_state)
                .fold(0.0, |m: f64, (a, b)| m.max((a - b).abs()))
        })
        .collect();
    diffs
        .windows(2)
        .zip(points.windows(2))
        .map(|(d, p)| (d[0] / d[1]).ln() / (p[0].value / p[1].value).ln())
        .collect()
}

/// `sweep`: one isolated run per value on a worker pool; results keep the
/// order of `values`.
pub fn sweep(
    cfg: &ExperimentConfig,
    w: &mut ArtifactWriter,
    param: SweepParam,
    values: &[f64],
) -> Result<String, CliError> {
    if values.is_empty() {
        return Err(CliError::Config {
            key: "values".into(),
            reason: "need at least one value".into(),
        });
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count()?)
        .build()
        .map_err(|e| CliError::Io(e.to_string()))?;
    let points: Vec<SweepPoint> =
        pool.install(|| values.par_iter().map(|&v| sweep_point(cfg, param, v)).collect::<Result<_, _>>())?;
    let orders = if param == SweepParam::Dt { richardson_orders(&points) } else { Vec::new() };
    let mut header = vec!["value".to_string()];
    header.extend(points[0].metrics.iter().map(|(k, _)| k.clone()));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = points.iter().map(|p| {
        let mut r = vec![num(p.value)];
        r.extend(p.metrics.iter().map(|&(_, v)| num(v)));
        r
    });
    w.write_csv("sweep.csv", &header_refs, rows)?;
    w.write_json(
        "sweep.json",
        &json!({ "param": param, "values": values, "points": points, "richardson_orders": orders }),
    )?;
    let mut out = format!("{}\n", header.join(" "));
    for p in &points {
        let cells: Vec<String> = p.metrics.iter().map(|&(_, v)| format!("{v:.6e}")).collect();
        let _ = writeln!(out, "{} {}", p.value, cells.join(" "));
    }
    for (i, o) in orders.iter().enumerate() {
        let _ = writeln!(out, "richardson order ({}, {}, {}): {o:.4}", values[i], values[i + 1], values[i + 2]);
    }
    Ok(out)
}
