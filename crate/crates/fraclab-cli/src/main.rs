//! Reproducible experiment runner: parses configs, dispatches to the solvers
//! and scans, and writes report.json + CSV artifacts.
//!
//! Exit codes: 0 = completed run (including non-converged outcomes),
//! 2 = validation error, 3 = numerical failure.

mod config;

use clap::{Args, Parser, Subcommand};
use config::RawConfig;
use fraclab::diagnostics::{
    dirac_blowup_scan, gradient_integrability_scan, nonexistence_scan, sobolev_gain_scan,
};
use fraclab::grid::Grid;
use fraclab::report::{ScanResult, Scheme, SolveReport};
use fraclab::solvers::{
    check_admissible, solve_fixed_point, solve_linear, solve_monotone, solve_newton,
    solve_reaction, standard_trial_family, FixedPointConfig, MonotoneSchedule,
};
use fraclab::{assemble, build_grid, critical_exponents, Error as LabError, ScalarField};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Parser)]
#[command(name = "fraclab", version, about = "fractional-diffusion experiment runner")]
struct Cli {
    /// Flat key=value config file; command-line flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: $OUT_DIR or ./fraclab-out).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one solver (linear | monotone | fixed-point | reaction | newton).
    Solve(CommonArgs),
    /// Refinement scan: --kind grad-integrability | sobolev-gain.
    Scan(CommonArgs),
    /// Structural checks of the assembled operator, optional binary dump.
    ValidateOperator(CommonArgs),
    /// Mollified point-mass blow-up experiment.
    Dirac(CommonArgs),
    /// Non-existence integrand refinement scan.
    Nonexist(CommonArgs),
    /// Solve two ordered data sets and check the comparison principle.
    Compare(CommonArgs),
}

#[derive(Args, Default)]
struct CommonArgs {
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    /// Comma list of p values (dirac, nonexist).
    #[arg(long)]
    p_values: Option<String>,
    #[arg(long)]
    m: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    lambda_cap: Option<f64>,
    /// Ball radius parameter of the fixed-point scheme.
    #[arg(long)]
    l: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    n_grid: Option<usize>,
    /// Comma list of grid sizes for refinement scans.
    #[arg(long)]
    refinements: Option<String>,
    /// Comma list of swept exponents (a for grad-integrability, q for sobolev-gain).
    #[arg(long)]
    exponents: Option<String>,
    /// Comma list of mollifier widths, strictly decreasing.
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    w_exp: Option<f64>,
    /// Data descriptor: const:V | deltapow:T | pointpow:C:T | bump:C:W[:MASS] | file:PATH.
    #[arg(long)]
    f: Option<String>,
    /// Weight descriptor (reaction scheme), same grammar as --f.
    #[arg(long)]
    g: Option<String>,
    #[arg(long)]
    f1: Option<String>,
    #[arg(long)]
    f2: Option<String>,
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    tol_outer: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    damping: Option<f64>,
    /// Outer schedule depth: regularization indices 2, 4, ..., 2^n_levels.
    #[arg(long)]
    n_levels: Option<usize>,
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    kind: Option<String>,
    /// Write the assembled matrix to this path (validate-operator).
    #[arg(long)]
    dump_matrix: Option<String>,
    #[arg(long)]
    delta_min: Option<f64>,
}

fn main() {
    let cli = Cli::parse();
    std::process::exit(run(cli));
}

fn fail_validation(msg: &str) -> i32 {
    eprintln!("error: {msg}");
    2
}

fn lab_error_exit(e: &LabError) -> i32 {
    eprintln!("error: {e}");
    match e {
        LabError::NumericalFailure(_) | LabError::Io(_) => 3,
        _ => 2,
    }
}

fn run(cli: Cli) -> i32 {
    if let Ok(threads) = std::env::var("THREADS") {
        match threads.parse::<usize>() {
            Ok(t) if t >= 1 => fraclab::par::configure_threads(t),
            _ => return fail_validation("THREADS must be a positive integer"),
        }
    }
    let (name, args) = match &cli.cmd {
        Cmd::Solve(a) => ("solve", a),
        Cmd::Scan(a) => ("scan", a),
        Cmd::ValidateOperator(a) => ("validate-operator", a),
        Cmd::Dirac(a) => ("dirac", a),
        Cmd::Nonexist(a) => ("nonexist", a),
        Cmd::Compare(a) => ("compare", a),
    };
    let mut cfg = match &cli.config {
        Some(path) => match RawConfig::from_file(path) {
            Ok(c) => c,
            Err(e) => return fail_validation(&e.message),
        },
        None => RawConfig::default(),
    };
    if let Some(sub) = cfg.get("subcommand") {
        if sub != name {
            return fail_validation(&format!(
                "config file names subcommand '{sub}' but '{name}' was invoked"
            ));
        }
    }
    cfg.set("subcommand", name.to_string());
    merge_flags(&mut cfg, args);
    if let Some(dir) = &cli.out_dir {
        cfg.set("out_dir", dir.display().to_string());
    }
    let out_dir = cfg
        .get("out_dir")
        .map(PathBuf::from)
        .or_else(|| std::env::var("OUT_DIR").ok().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("fraclab-out"));

    let outcome = match name {
        "solve" => run_solve(&cfg),
        "scan" => run_scan(&cfg),
        "validate-operator" => run_validate(&cfg),
        "dirac" => run_dirac(&cfg),
        "nonexist" => run_nonexist(&cfg),
        "compare" => run_compare(&cfg),
        _ => unreachable!(),
    };
    match outcome {
        Ok(run_output) => match write_outputs(&out_dir, name, &cfg, run_output) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("error: cannot write outputs: {e}");
                3
            }
        },
        Err(RunError::Validation(msg)) => fail_validation(&msg),
        Err(RunError::Lab(e)) => lab_error_exit(&e),
    }
}

fn merge_flags(cfg: &mut RawConfig, a: &CommonArgs) {
    macro_rules! put {
        ($key:literal, $field:expr) => {
            if let Some(v) = &$field {
                cfg.set($key, v.to_string());
            }
        };
    }
    put!("s", a.s);
    put!("p", a.p);
    put!("p_values", a.p_values);
    put!("m", a.m);
    put!("lambda", a.lambda);
    put!("lambda_cap", a.lambda_cap);
    put!("l", a.l);
    put!("beta", a.beta);
    put!("n_grid", a.n_grid);
    put!("refinements", a.refinements);
    put!("exponents", a.exponents);
    put!("eps", a.eps);
    put!("w_exp", a.w_exp);
    put!("f", a.f);
    put!("g", a.g);
    put!("f1", a.f1);
    put!("f2", a.f2);
    put!("scheme", a.scheme);
    put!("tol", a.tol);
    put!("tol_outer", a.tol_outer);
    put!("max_iter", a.max_iter);
    put!("damping", a.damping);
    put!("n_levels", a.n_levels);
    put!("k_max", a.k_max);
    put!("seed", a.seed);
    put!("kind", a.kind);
    put!("dump_matrix", a.dump_matrix);
    put!("delta_min", a.delta_min);
}

enum RunError {
    Validation(String),
    Lab(LabError),
}

impl From<LabError> for RunError {
    fn from(e: LabError) -> Self {
        match &e {
            LabError::NumericalFailure(_) | LabError::Io(_) => RunError::Lab(e),
            _ => RunError::Validation(e.to_string()),
        }
    }
}

impl From<config::ConfigError> for RunError {
    fn from(e: config::ConfigError) -> Self {
        RunError::Validation(e.message)
    }
}

fn validation(msg: impl Into<String>) -> RunError {
    RunError::Validation(msg.into())
}

/// Parse a data descriptor into a field on the grid.
fn parse_field(descriptor: &str, grid: &Arc<Grid>) -> Result<ScalarField, RunError> {
    let parts: Vec<&str> = descriptor.split(':').collect();
    let num = |t: &str| -> Result<f64, RunError> {
        t.parse::<f64>()
            .map_err(|_| validation(format!("data descriptor '{descriptor}': '{t}' is not a number")))
    };
    match parts.as_slice() {
        ["const", v] => Ok(ScalarField::constant(grid, num(v)?)),
        ["deltapow", t] => Ok(ScalarField::delta_pow(grid, num(t)?)),
        ["pointpow", c, t] => Ok(ScalarField::point_pow(grid, num(c)?, num(t)?)?),
        ["bump", c, w] => Ok(ScalarField::bump(grid, num(c)?, num(w)?, 1.0)?),
        ["bump", c, w, mass] => Ok(ScalarField::bump(grid, num(c)?, num(w)?, num(mass)?)?),
        ["file", path] => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| validation(format!("cannot read samples {path}: {e}")))?;
            let mut values = Vec::new();
            for line in text.lines() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') || line.starts_with("x,") {
                    continue;
                }
                let cell = line.rsplit(',').next().unwrap().trim();
                values.push(
                    cell.parse::<f64>()
                        .map_err(|_| validation(format!("bad sample line '{line}' in {path}")))?,
                );
            }
            if values.len() != grid.n_interior {
                return Err(validation(format!(
                    "{path}: {} samples but the grid has {} nodes",
                    values.len(),
                    grid.n_interior
                )));
            }
            Ok(ScalarField::new(grid.clone(), values)?)
        }
        _ => Err(validation(format!(
            "unrecognized data descriptor '{descriptor}' (use const:V | deltapow:T | pointpow:C:T | bump:C:W[:MASS] | file:PATH)"
        ))),
    }
}

#[derive(Serialize)]
#[serde(untagged)]
enum Payload {
    Solve(Box<SolveReport>),
    Scan(ScanResult),
    Validate(ValidateReport),
    Compare(CompareReport),
}

#[derive(Serialize)]
struct ValidateReport {
    n_grid: usize,
    s: f64,
    symmetry_defect: f64,
    offdiagonal_sign_ok: bool,
    min_dominance_margin: f64,
    constant_field_image_min: f64,
    all_pass: bool,
    matrix_dumped: Option<String>,
}

#[derive(Serialize)]
struct CompareReport {
    scheme: Scheme,
    worst_violation: f64,
    tolerance: f64,
    pass: bool,
    u1_min: f64,
    u2_sup: f64,
}

struct RunOutput {
    payload: Payload,
    exponents: Option<fraclab::ExponentSet>,
    summary: String,
    csvs: Vec<(String, String)>,
}

fn require_s(cfg: &RawConfig) -> Result<f64, RunError> {
    let s = cfg
        .f64("s")?
        .ok_or_else(|| validation("missing required parameter s"))?;
    if !(s > 0.5 && s < 1.0) {
        return Err(validation(format!(
            "order s must lie in the open interval (1/2, 1), got {s}"
        )));
    }
    Ok(s)
}

fn embed_exponents(cfg: &RawConfig, s: f64) -> Result<fraclab::ExponentSet, RunError> {
    let m = cfg.f64("m")?.unwrap_or(1.0);
    let beta = cfg.f64("beta")?.unwrap_or(0.0);
    Ok(critical_exponents(1, s, m, beta)?)
}

fn schedule_from(cfg: &RawConfig) -> Result<MonotoneSchedule, RunError> {
    let mut sched = MonotoneSchedule::default();
    if let Some(levels) = cfg.usize("n_levels")? {
        if levels == 0 || levels > 60 {
            return Err(validation("n_levels must lie in 1..=60"));
        }
        sched.n_sequence = (1..=levels as u32).map(|j| (1u64 << j) as f64).collect();
    }
    if let Some(k) = cfg.usize("k_max")? {
        sched.k_max = k.max(1);
    }
    if let Some(t) = cfg.f64("tol")? {
        sched.tol_inner = t;
    }
    if let Some(t) = cfg.f64("tol_outer")? {
        sched.tol_outer = t;
    }
    if let Some(d) = cfg.f64("damping")? {
        sched.damping = d;
    }
    if let Some(mi) = cfg.usize("max_iter")? {
        sched.max_iter_inner = mi;
    }
    Ok(sched)
}

fn solution_csv(fields: &[(&str, &ScalarField)]) -> String {
    let grid = &fields[0].1.grid;
    let mut head = String::from("x");
    for (name, _) in fields {
        head.push(',');
        head.push_str(name);
    }
    head.push('\n');
    for i in 0..grid.n_interior {
        head.push_str(&format!("{:.17e}", grid.nodes[i]));
        for (_, f) in fields {
            head.push_str(&format!(",{:.17e}", f.values[i]));
        }
        head.push('\n');
    }
    head
}

fn linear_report(op: &fraclab::FracOp, f: &ScalarField) -> Result<SolveReport, RunError> {
    let u = solve_linear(op, f)?;
    let au = op.apply(&u);
    let res = au.max_excess_over(f).max(f.max_excess_over(&au)).max(0.0);
    let mut rep = SolveReport::new(Scheme::Linear, 1e-10 * f.sup_norm().max(1e-300), u);
    rep.converged = true;
    rep.iterates_inner = 1;
    rep.iterates_outer = 1;
    rep.residual_history = vec![res];
    rep.equation_residual = res;
    Ok(rep)
}

fn run_solve(cfg: &RawConfig) -> Result<RunOutput, RunError> {
    let s = require_s(cfg)?;
    let n_grid = cfg.usize("n_grid")?.unwrap_or(400);
    let grid = build_grid(n_grid)?;
    let f_desc = cfg.get("f").unwrap_or("const:1");
    let f = parse_field(f_desc, &grid)?;
    let scheme = cfg.get("scheme").unwrap_or("monotone");
    let op = assemble(&grid, s)?;
    let report = match scheme {
        "linear" => linear_report(&op, &f)?,
        "monotone" => {
            let p = cfg.f64("p")?.ok_or_else(|| validation("monotone scheme requires p"))?;
            solve_monotone(&op, &f, p, &schedule_from(cfg)?)?
        }
        "fixed-point" => {
            let p = cfg.f64("p")?.ok_or_else(|| validation("fixed-point scheme requires p"))?;
            let m = cfg.f64("m")?.ok_or_else(|| validation("fixed-point scheme requires m"))?;
            let mut fp = FixedPointConfig::new(p, m);
            if let Some(l) = cfg.f64("l")? {
                fp.l = l;
            }
            if let Some(cap) = cfg.f64("lambda_cap")? {
                fp.lambda_cap = cap;
            }
            if let Some(t) = cfg.f64("tol")? {
                fp.tol = t;
            }
            if let Some(mi) = cfg.usize("max_iter")? {
                fp.max_iter = mi;
            }
            solve_fixed_point(&op, &f, &fp)?
        }
        "reaction" => {
            let p = cfg.f64("p")?.ok_or_else(|| validation("reaction scheme requires p"))?;
            let lambda = cfg.f64("lambda")?.unwrap_or(1.0);
            let g_desc = cfg
                .get("g")
                .ok_or_else(|| validation("reaction scheme requires a weight g"))?;
            let g = parse_field(g_desc, &grid)?;
            // admissibility gate before any solve is attempted
            let seed = cfg.u64("seed")?.unwrap_or(42);
            let family = standard_trial_family(&grid, seed, 50);
            let certificate = check_admissible(&g, p, &family)?;
            if !(certificate > 0.0) {
                return Err(validation(format!(
                    "weight failed the admissibility certificate: C = {certificate}"
                )));
            }
            solve_reaction(&op, &f, &g, lambda, p, &schedule_from(cfg)?)?
        }
        "newton" => {
            let p = cfg.f64("p")?.ok_or_else(|| validation("newton scheme requires p"))?;
            let tol = cfg.f64("tol")?.unwrap_or(1e-9);
            let max_iter = cfg.usize("max_iter")?.unwrap_or(80);
            solve_newton(&op, &f, p, tol, max_iter)?
        }
        other => {
            return Err(validation(format!(
                "unknown scheme '{other}' (linear | monotone | fixed-point | reaction | newton)"
            )))
        }
    };
    let summary = format!(
        "solve scheme={scheme} s={s} n_grid={n_grid} f={f_desc}\n\
         converged={} outer={} inner={} equation_residual={:.3e} violation={:.3e}\n",
        report.converged,
        report.iterates_outer,
        report.iterates_inner,
        report.equation_residual,
        report.monotone_violation
    );
    let csvs = vec![
        ("residual_history.csv".to_string(), report.history_csv()),
        (
            "solution.csv".to_string(),
            solution_csv(&[("u", &report.final_field)]),
        ),
    ];
    Ok(RunOutput {
        payload: Payload::Solve(Box::new(report)),
        exponents: Some(embed_exponents(cfg, s)?),
        summary,
        csvs,
    })
}

fn run_scan(cfg: &RawConfig) -> Result<RunOutput, RunError> {
    let s = require_s(cfg)?;
    let kind = cfg
        .get("kind")
        .ok_or_else(|| validation("scan requires --kind grad-integrability | sobolev-gain"))?;
    let refinements = cfg
        .usize_list("refinements")?
        .unwrap_or_else(|| vec![200, 400, 800, 1600]);
    let exps = cfg
        .f64_list("exponents")?
        .ok_or_else(|| validation("scan requires --exponents a1,a2,..."))?;
    let result = match kind {
        "grad-integrability" => {
            let f_desc = cfg.get("f").unwrap_or("const:1").to_string();
            let w_exp = cfg.f64("w_exp")?.unwrap_or(0.0);
            let f_builder = move |g: &Arc<Grid>| {
                parse_field(&f_desc, g).map_err(|e| match e {
                    RunError::Validation(m) => LabError::InvalidArgument(m),
                    RunError::Lab(err) => err,
                })
            };
            gradient_integrability_scan(s, &f_builder, &exps, &refinements, w_exp)?
        }
        "sobolev-gain" => {
            let m = cfg
                .f64("m")?
                .ok_or_else(|| validation("sobolev-gain scan requires m"))?;
            sobolev_gain_scan(s, m, &exps, &refinements)?
        }
        other => {
            return Err(validation(format!(
                "unknown scan kind '{other}' (grad-integrability | sobolev-gain)"
            )))
        }
    };
    scan_output(cfg, s, result)
}

fn scan_output(cfg: &RawConfig, s: f64, result: ScanResult) -> Result<RunOutput, RunError> {
    let mut summary = format!(
        "scan kind={} predicted_threshold={:?} empirical_threshold={:?}\n",
        result.kind, result.predicted_threshold, result.empirical_threshold
    );
    for (k, &p) in result.parameter_grid.iter().enumerate() {
        summary.push_str(&format!(
            "  sweep={p}: verdict={} fit={:?}\n",
            result.verdicts[k], result.fit_exponent[k]
        ));
    }
    summary.push_str(&format!(
        "verdicts monotone in sweep: {}\n",
        result.verdicts_monotone()
    ));
    let csvs = vec![("scan.csv".to_string(), result.csv())];
    Ok(RunOutput {
        payload: Payload::Scan(result),
        exponents: Some(embed_exponents(cfg, s)?),
        summary,
        csvs,
    })
}

fn run_validate(cfg: &RawConfig) -> Result<RunOutput, RunError> {
    let s = require_s(cfg)?;
    let n_grid = cfg.usize("n_grid")?.unwrap_or(400);
    let grid = build_grid(n_grid)?;
    let op = assemble(&grid, s)?;
    let a = op.matrix();
    let n = grid.n_interior;
    let mut worst_sym: f64 = 0.0;
    let mut sign_ok = true;
    let mut min_margin = f64::INFINITY;
    for i in 0..n {
        let mut off = 0.0;
        for j in 0..n {
            if j != i {
                worst_sym = worst_sym.max((a[(i, j)] - a[(j, i)]).abs());
                sign_ok &= a[(i, j)] < 0.0;
                off += a[(i, j)].abs();
            }
        }
        min_margin = min_margin.min(a[(i, i)] - off);
    }
    let one = ScalarField::constant(&grid, 1.0);
    let image_min = op.apply(&one).min();
    let scale = a[(0, 0)];
    let matrix_dumped = match cfg.get("dump_matrix") {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(LabError::Io)?;
            op.write_binary(std::io::BufWriter::new(file))?;
            Some(path.to_string())
        }
        None => None,
    };
    let rep = ValidateReport {
        n_grid,
        s,
        symmetry_defect: worst_sym / scale,
        offdiagonal_sign_ok: sign_ok,
        min_dominance_margin: min_margin,
        constant_field_image_min: image_min,
        all_pass: sign_ok && min_margin > 0.0 && image_min > 0.0 && worst_sym <= 1e-12 * scale,
        matrix_dumped,
    };
    let summary = format!(
        "validate-operator s={s} n_grid={n_grid}\n\
         symmetry_defect={:.3e} sign_ok={} dominance_margin={:.6e} (A·1)_min={:.6e} all_pass={}\n",
        rep.symmetry_defect, rep.offdiagonal_sign_ok, rep.min_dominance_margin,
        rep.constant_field_image_min, rep.all_pass
    );
    Ok(RunOutput {
        payload: Payload::Validate(rep),
        exponents: Some(embed_exponents(cfg, s)?),
        summary,
        csvs: Vec::new(),
    })
}

fn run_dirac(cfg: &RawConfig) -> Result<RunOutput, RunError> {
    let s = require_s(cfg)?;
    let n_grid = cfg.usize("n_grid")?.unwrap_or(800);
    let p_values = cfg
        .f64_list("p_values")?
        .or(cfg.f64("p")?.map(|p| vec![p]))
        .unwrap_or_else(|| vec![1.5, 3.0]);
    let eps = cfg
        .f64_list("eps")?
        .unwrap_or_else(|| vec![0.2, 0.1, 0.05, 0.025]);
    let result = dirac_blowup_scan(s, &p_values, &eps, n_grid)?;
    scan_output(cfg, s, result)
}

fn run_nonexist(cfg: &RawConfig) -> Result<RunOutput, RunError> {
    let s = require_s(cfg)?;
    let p_values = cfg
        .f64_list("p_values")?
        .or(cfg.f64("p")?.map(|p| vec![p]))
        .unwrap_or_else(|| vec![2.0, 4.0, 5.0]);
    let refinements = cfg
        .usize_list("refinements")?
        .unwrap_or_else(|| vec![3200, 6400, 12800, 25600]);
    let result = nonexistence_scan(s, &p_values, &refinements)?;
    scan_output(cfg, s, result)
}

fn run_compare(cfg: &RawConfig) -> Result<RunOutput, RunError> {
    let s = require_s(cfg)?;
    let n_grid = cfg.usize("n_grid")?.unwrap_or(400);
    let grid = build_grid(n_grid)?;
    let f1 = parse_field(
        cfg.get("f1").ok_or_else(|| validation("compare requires --f1"))?,
        &grid,
    )?;
    let f2 = parse_field(
        cfg.get("f2").ok_or_else(|| validation("compare requires --f2"))?,
        &grid,
    )?;
    if f1.max_excess_over(&f2) > 0.0 {
        return Err(validation(
            "compare requires f1 <= f2 pointwise on the grid",
        ));
    }
    let scheme = cfg.get("scheme").unwrap_or("linear");
    let op = assemble(&grid, s)?;
    let (tag, u1, u2) = match scheme {
        "linear" => (
            Scheme::Linear,
            solve_linear(&op, &f1)?,
            solve_linear(&op, &f2)?,
        ),
        "monotone" => {
            let p = cfg.f64("p")?.ok_or_else(|| validation("monotone compare requires p"))?;
            let sched = schedule_from(cfg)?;
            (
                Scheme::Monotone,
                solve_monotone(&op, &f1, p, &sched)?.final_field,
                solve_monotone(&op, &f2, p, &sched)?.final_field,
            )
        }
        other => {
            return Err(validation(format!(
                "compare supports schemes linear | monotone, got '{other}'"
            )))
        }
    };
    let violation = u1.max_excess_over(&u2).max(0.0);
    let tolerance = 1e-6 * u2.sup_norm();
    let rep = CompareReport {
        scheme: tag,
        worst_violation: violation,
        tolerance,
        pass: violation <= tolerance,
        u1_min: u1.min(),
        u2_sup: u2.sup_norm(),
    };
    let summary = format!(
        "compare scheme={scheme} s={s} n_grid={n_grid}\n\
         worst_violation={:.6e} tolerance={:.6e} pass={}\n",
        rep.worst_violation, rep.tolerance, rep.pass
    );
    let csvs = vec![(
        "solution.csv".to_string(),
        solution_csv(&[("u1", &u1), ("u2", &u2)]),
    )];
    Ok(RunOutput {
        payload: Payload::Compare(rep),
        exponents: Some(embed_exponents(cfg, s)?),
        summary,
        csvs,
    })
}

#[derive(Serialize)]
struct Report<'a> {
    schema_version: u32,
    tool_version: &'static str,
    timestamp: u64,
    command: &'a str,
    config: &'a std::collections::BTreeMap<String, String>,
    exponents: Option<fraclab::ExponentSet>,
    result: &'a Payload,
}

fn write_outputs(
    out_dir: &Path,
    command: &str,
    cfg: &RawConfig,
    output: RunOutput,
) -> std::io::Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let timestamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0);
    let report = Report {
        schema_version: 1,
        tool_version: env!("CARGO_PKG_VERSION"),
        timestamp,
        command,
        config: cfg.echo(),
        exponents: output.exponents,
        result: &output.payload,
    };
    let json = serde_json::to_string_pretty(&report).expect("report serialization");
    std::fs::write(out_dir.join("report.json"), json)?;
    std::fs::write(out_dir.join("summary.txt"), &output.summary)?;
    for (name, body) in &output.csvs {
        std::fs::write(out_dir.join(name), body)?;
    }
    print!("{}", output.summary);
    Ok(())
}
