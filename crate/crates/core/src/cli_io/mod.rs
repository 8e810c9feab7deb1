//! Command-line front end: argument parsing, run directories, reports.

pub mod config;
pub mod store;
pub mod verify;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

pub use config::{load_config, resolve_config, Loaded, Overrides, RunConfig, Spacing};
pub use store::{run_id, RunDir, RunManifest};

use crate::analysis::{
    estimate_plateau, fgr_decompose, fit_exponential, fit_quadratic, spreading_time, ExpFitOptions,
    FgrDecomposition, RateFit, RatePoint, DEFAULT_TAIL_FRACTION,
};
use crate::ensemble::{EnsembleMode, Observable, TimeSeries};
use crate::error::{Error, Result};
use crate::model::{Boundary, LadderSpec};
use crate::onebody::{detect_meso_echo, onebody_return, quenched_le, DisorderSampling, HoppingMatrix, MesoEcho};
use crate::propagate::Method;
use crate::protocols::{forward_p11, le_sweep, loschmidt_echo, sp_paradigm};

/// Environment variable giving the default worker count.
pub const WORKERS_ENV: &str = "LADDER_ECHO_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "ladder-echo", version, about = "Loschmidt echo simulations of a spin-1/2 ladder")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Polarization autocorrelation P11(t) under the full Hamiltonian.
    Forward(RunArgs),
    /// Loschmidt echo M_LE(2 t_R) at one coupling point.
    Le(RunArgs),
    /// Loschmidt echo over an (alpha, J_SE) grid.
    Sweep(SweepArgs),
    /// Survival probability of the one-body edge-coupled chain.
    Sp(SpArgs),
    /// One-body return probability or quenched-disorder echo of one leg.
    Onebody(OnebodyArgs),
    /// Fit the curves of a run directory and write report.json.
    Fit(FitArgs),
    /// Run the oracle cross-checks.
    Verify(CommonArgs),
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Spins per leg.
    #[arg(long)]
    m: Option<usize>,
    /// Periodic legs.
    #[arg(long, conflicts_with = "open")]
    ring: bool,
    /// Open legs.
    #[arg(long)]
    open: bool,
    /// Rung anisotropy (0 XY, -0.5 Heisenberg, 1 dipolar).
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    /// Interchain coupling J_SE (a comma-separated list for `sweep`).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    jse: Option<Vec<f64>>,
    #[arg(long, allow_negative_numbers = true)]
    js: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    je: Option<f64>,
}

#[derive(Debug, Args)]
struct EvolutionArgs {
    /// Largest time (total time 2 t_R for echoes).
    #[arg(long)]
    tmax: Option<f64>,
    /// Smallest total time of a log-spaced schedule.
    #[arg(long)]
    tmin: Option<f64>,
    /// exact | trotter2 | trotter4
    #[arg(long)]
    method: Option<Method>,
    #[arg(long)]
    dt: Option<f64>,
    /// Trotter steps between samples of `forward`.
    #[arg(long)]
    stride: Option<usize>,
    /// Number of schedule points.
    #[arg(long)]
    points: Option<usize>,
    /// log | linear
    #[arg(long, value_parser = parse_spacing)]
    spacing: Option<Spacing>,
}

#[derive(Debug, Args)]
struct EnsembleArgs {
    /// exact | random
    #[arg(long)]
    ensemble: Option<EnsembleMode>,
    #[arg(long)]
    realizations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Worker threads (default: $LADDER_ECHO_WORKERS, else all cores).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Root directory for run directories.
    #[arg(long, default_value = "runs")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    evolution: EvolutionArgs,
    #[command(flatten)]
    ensemble: EnsembleArgs,
    #[command(flatten)]
    output: OutputArgs,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated anisotropies.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    alphas: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
struct SpArgs {
    #[arg(long, default_value_t = 0.3)]
    jse: f64,
    #[arg(long, default_value_t = 1.0)]
    je: f64,
    /// Chain length.
    #[arg(long, default_value_t = 2000)]
    length: usize,
    #[arg(long, default_value_t = 60.0)]
    tmax: f64,
    /// Sampling step.
    #[arg(long, default_value_t = 0.1)]
    step: f64,
    #[arg(long, default_value = "runs")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct OnebodyArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 50.0)]
    tmax: f64,
    #[arg(long, default_value_t = 0.05)]
    step: f64,
    /// Site-energy amplitude; switches to the quenched-disorder echo.
    #[arg(long)]
    disorder: Option<f64>,
    /// Random disorder draws (default: all 2^m patterns).
    #[arg(long)]
    realizations: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Minimum prominence of a mesoscopic echo.
    #[arg(long, default_value_t = crate::onebody::DEFAULT_PROMINENCE)]
    prominence: f64,
    #[arg(long, default_value = "runs")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Run directory to analyse.
    #[arg(long)]
    run: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    onset: f64,
    #[arg(long, default_value_t = 3.0)]
    guard: f64,
    /// Upper time of the short-time fit.
    #[arg(long, default_value_t = crate::analysis::DEFAULT_T_CUT)]
    tcut: f64,
    /// Saturation level (default: 1/(2m) from the manifest).
    #[arg(long)]
    plateau: Option<f64>,
    /// Fit ln(M - plateau) instead of ln M.
    #[arg(long)]
    subtract_plateau: bool,
}

fn parse_spacing(s: &str) -> std::result::Result<Spacing, String> {
    match s {
        "log" => Ok(Spacing::Log),
        "linear" => Ok(Spacing::Linear),
        other => Err(format!("unknown spacing {other:?}; expected log or linear")),
    }
}

/// A command failure with its exit code.
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) | Error::InvalidSpec(_) | Error::DimensionCap { .. } => 2,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

/// Parses `argv` (including the program name), runs the command, and returns
/// the process exit code: 0 on success, 2 for usage or configuration errors,
/// 1 for numerical failures.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn worker_count(flag: Option<usize>) -> std::result::Result<Option<usize>, Failure> {
    if let Some(n) = flag {
        return Ok(Some(n));
    }
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .parse()
            .map(Some)
            .map_err(|_| usage(format!("{WORKERS_ENV}={v:?} is not a worker count"))),
        Err(_) => Ok(None),
    }
}

fn with_workers<R>(n: Option<usize>, f: impl FnOnce() -> R + Send) -> std::result::Result<R, Failure>
where
    R: Send,
{
    match n {
        None => Ok(f()),
        Some(0) => Err(usage("--workers must be at least 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Failure {
                    code: 1,
                    message: e.to_string(),
                })?;
            Ok(pool.install(f))
        }
    }
}

fn dispatch(cmd: Command) -> std::result::Result<(), Failure> {
    match cmd {
        Command::Forward(a) => {
            let workers = worker_count(a.common.workers)?;
            with_workers(workers, || cmd_forward(&a))?
        }
        Command::Le(a) => {
            let workers = worker_count(a.common.workers)?;
            with_workers(workers, || cmd_le(&a))?
        }
        Command::Sweep(a) => {
            let workers = worker_count(a.run.common.workers)?;
            with_workers(workers, || cmd_sweep(&a))?
        }
        Command::Sp(a) => cmd_sp(&a),
        Command::Onebody(a) => cmd_onebody(&a),
        Command::Fit(a) => cmd_fit(&a),
        Command::Verify(a) => {
            let workers = worker_count(a.workers)?;
            with_workers(workers, cmd_verify)?
        }
    }
}

fn boundary_flag(m: &ModelArgs) -> Option<Boundary> {
    match (m.ring, m.open) {
        (true, _) => Some(Boundary::Ring),
        (_, true) => Some(Boundary::Open),
        _ => None,
    }
}

fn overrides(run: &RunArgs, sweep_grid: bool) -> std::result::Result<Overrides, Failure> {
    let m = &run.model;
    let e = &run.evolution;
    let (j_se, j_ses) = match (&m.jse, sweep_grid) {
        (None, _) => (None, None),
        (Some(list), true) => (None, Some(list.clone())),
        (Some(list), false) if list.len() == 1 => (Some(list[0]), None),
        (Some(_), false) => return Err(usage("--jse takes a single value outside `sweep`")),
    };
    Ok(Overrides {
        m: m.m,
        boundary: boundary_flag(m),
        j_s: m.js,
        j_e: m.je,
        j_se,
        alpha: m.alpha,
        t_max: e.tmax,
        t_min: e.tmin,
        method: e.method,
        dt: e.dt,
        stride: e.stride,
        ensemble: run.ensemble.ensemble,
        realizations: run.ensemble.realizations,
        seed: run.ensemble.seed,
        points: e.points,
        spacing: e.spacing,
        alphas: None,
        j_ses,
    })
}

fn resolve(run: &RunArgs, flags: &Overrides) -> Result<Loaded> {
    match &run.output.config {
        Some(path) => load_config(path, flags),
        None => resolve_config(None, flags),
    }
}

/// Up to `rows` evenly spaced samples as a two-column table.
fn print_table(title: &str, series: &TimeSeries, rows: usize) {
    println!("{title}");
    println!("{:>12}  {:>14}", "t", series.observable.to_string());
    let n = series.len();
    if n == 0 {
        return;
    }
    let stride = n.div_ceil(rows).max(1);
    let mut idx: Vec<usize> = (0..n).step_by(stride).collect();
    if idx.last() != Some(&(n - 1)) {
        idx.push(n - 1);
    }
    for i in idx {
        println!("{:>12.4}  {:>14.8}", series.times[i], series.values[i]);
    }
}

fn announce(dir: &RunDir, conflicts: &[String]) {
    for c in conflicts {
        eprintln!("note: {c}");
    }
    println!("run {} -> {}", dir.manifest.run_id, dir.path.display());
}

fn cmd_forward(a: &RunArgs) -> std::result::Result<(), Failure> {
    let loaded = resolve(a, &overrides(a, false)?)?;
    let c = &loaded.config;
    let model = c.ladder()?;
    let series = forward_p11(&model, &c.ensemble, &c.evolution)?;
    let manifest = RunManifest::new("forward", c.clone(), json!(null), loaded.conflicts.clone())?;
    let dir = RunDir::create(&a.output.out, manifest)?;
    dir.write_series("P11", &series)?;
    announce(&dir, &loaded.conflicts);
    print_table("forward autocorrelation", &series, 12);
    Ok(())
}

fn cmd_le(a: &RunArgs) -> std::result::Result<(), Failure> {
    let loaded = resolve(a, &overrides(a, false)?)?;
    let c = &loaded.config;
    let series = loschmidt_echo(&c.ladder()?, &c.ensemble, &c.le_schedule()?, &c.evolution)?;
    let manifest = RunManifest::new("le", c.clone(), json!(null), loaded.conflicts.clone())?;
    let dir = RunDir::create(&a.output.out, manifest)?;
    dir.write_series("MLE", &series)?;
    announce(&dir, &loaded.conflicts);
    print_table("Loschmidt echo", &series, 12);
    Ok(())
}

/// File label of a sweep point.
pub fn sweep_label(alpha: f64, j_se: f64) -> String {
    format!("a{alpha}_j{j_se}")
}

#[derive(Debug, Clone, Serialize, serde::Deserialize)]
pub struct SweepEntry {
    pub label: String,
    pub alpha: f64,
    pub j_se: f64,
    pub error: Option<String>,
}

fn cmd_sweep(a: &SweepArgs) -> std::result::Result<(), Failure> {
    let mut flags = overrides(&a.run, true)?;
    flags.alphas = a.alphas.clone();
    let loaded = resolve(&a.run, &flags)?;
    let c = &loaded.config;
    let base = c.ladder()?;
    let schedule = c.le_schedule()?;
    let points = le_sweep(&base, &c.sweep.alphas, &c.sweep.j_ses, &schedule, &c.ensemble, &c.evolution);
    let manifest = RunManifest::new("sweep", c.clone(), json!(null), loaded.conflicts.clone())?;
    let dir = RunDir::create(&a.run.output.out, manifest)?;
    let mut entries = Vec::new();
    println!("{:>8}  {:>8}  {:>14}", "alpha", "j_se", "M_LE(t_max)");
    for p in &points {
        let label = sweep_label(p.alpha, p.j_se);
        let error = match &p.result {
            Ok(s) => {
                dir.write_series(&label, s)?;
                println!("{:>8}  {:>8}  {:>14.8}", p.alpha, p.j_se, s.values.last().copied().unwrap_or(f64::NAN));
                None
            }
            Err(e) => {
                println!("{:>8}  {:>8}  {:>14}", p.alpha, p.j_se, "failed");
                Some(e.to_string())
            }
        };
        entries.push(SweepEntry {
            label,
            alpha: p.alpha,
            j_se: p.j_se,
            error,
        });
    }
    dir.write_json("sweep.json", &entries)?;
    announce(&dir, &loaded.conflicts);
    let failed = entries.iter().filter(|e| e.error.is_some()).count();
    if failed > 0 {
        return Err(Failure {
            code: 1,
            message: format!("{failed} of {} sweep points failed; see sweep.json", entries.len()),
        });
    }
    Ok(())
}

fn linear_grid(t_max: f64, step: f64) -> std::result::Result<Vec<f64>, Failure> {
    if !(step > 0.0 && t_max > 0.0) {
        return Err(usage("time step and maximum time must be positive"));
    }
    let n = (t_max / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| k as f64 * step).collect())
}

fn cmd_sp(a: &SpArgs) -> std::result::Result<(), Failure> {
    let times = linear_grid(a.tmax, a.step)?;
    let series = sp_paradigm(a.jse, a.je, a.length, &times)?;
    let mut config = RunConfig::default();
    config.model.j_se = a.jse;
    config.model.j_e = a.je;
    let params = json!({"chain_length": a.length, "t_max": a.tmax, "step": a.step});
    let dir = RunDir::create(&a.out, RunManifest::new("sp", config, params, vec![])?)?;
    dir.write_series("SP", &series)?;
    announce(&dir, &[]);
    print_table("survival probability", &series, 12);
    Ok(())
}

fn cmd_onebody(a: &OnebodyArgs) -> std::result::Result<(), Failure> {
    if a.model.jse.as_ref().is_some_and(|v| v.len() > 1) {
        return Err(usage("--jse takes a single value for `onebody`"));
    }
    let mut config = RunConfig::default();
    let md = &a.model;
    config.model.m = md.m.unwrap_or(config.model.m);
    config.model.boundary = boundary_flag(md).unwrap_or(config.model.boundary);
    config.model.j_s = md.js.unwrap_or(config.model.j_s);
    config.model.j_e = md.je.unwrap_or(config.model.j_e);
    config.model.alpha = md.alpha.unwrap_or(config.model.alpha);
    if let Some(j) = md.jse.as_ref().and_then(|v| v.first()) {
        config.model.j_se = *j;
    }
    config.ensemble.seed = a.seed;
    config.validate()?;
    let spec = LadderSpec::new(config.model.m, config.model.boundary)?;
    let times = linear_grid(a.tmax, a.step)?;
    let params = json!({
        "t_max": a.tmax, "step": a.step, "disorder": a.disorder,
        "realizations": a.realizations, "prominence": a.prominence,
    });
    let dir = RunDir::create(&a.out, RunManifest::new("onebody", config.clone(), params, vec![])?)?;
    announce(&dir, &[]);
    match a.disorder {
        None => {
            let series = onebody_return(&HoppingMatrix::leg(&spec, config.model.j_s)?, &times)?;
            dir.write_series("P11", &series)?;
            print_table("one-body return probability", &series, 12);
            let echo = detect_meso_echo(&series, spec.m, config.model.j_s, a.prominence);
            dir.write_json("report.json", &echo)?;
            match echo {
                MesoEcho::Found(r) => println!(
                    "mesoscopic echo at t = {:.3} (height {:.4}); estimate hbar/Delta = {:.3}",
                    r.t_peak, r.peak_value, r.t_heisenberg_estimate
                ),
                MesoEcho::NotFound { t_heisenberg_estimate } => {
                    println!("no echo found; estimate hbar/Delta = {t_heisenberg_estimate:.3}")
                }
            }
        }
        Some(amp) => {
            let sampling = match a.realizations {
                None => DisorderSampling::Exhaustive,
                Some(n) => DisorderSampling::Random { n, seed: a.seed },
            };
            let series = quenched_le(&spec, config.model.j_s, amp, sampling, &times)?;
            dir.write_series("MLE", &series)?;
            print_table("quenched-disorder echo", &series, 12);
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
struct CurveReport {
    label: String,
    alpha: f64,
    j_se: f64,
    sigma2: Option<f64>,
    t_spread: Option<f64>,
    plateau_tail: Option<f64>,
    fit: Option<RateFit>,
    fit_error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
struct FitReport {
    run_id: String,
    options: ExpFitOptions,
    curves: Vec<CurveReport>,
    decomposition: Option<FgrDecomposition>,
    decomposition_error: Option<String>,
}

fn cmd_fit(a: &FitArgs) -> std::result::Result<(), Failure> {
    let dir = RunDir::open(&a.run)?;
    let cfg = &dir.manifest.config;
    let sweep: Vec<SweepEntry> = match std::fs::read(dir.path.join("sweep.json")) {
        Ok(bytes) => serde_json::from_slice(&bytes).map_err(Error::from)?,
        Err(_) => Vec::new(),
    };
    let plateau = a.plateau.unwrap_or(1.0 / (2.0 * cfg.model.m as f64));
    let base_opts = ExpFitOptions {
        onset: a.onset,
        guard: a.guard,
        plateau: Some(plateau),
        t_spread: None,
        t_end: None,
        subtract_plateau: a.subtract_plateau,
    };
    let mut curves = Vec::new();
    let mut points = Vec::new();
    for (label, series) in dir.read_all_series()? {
        if series.observable == Observable::SP {
            continue;
        }
        let (alpha, j_se) = sweep
            .iter()
            .find(|e| e.label == label)
            .map(|e| (e.alpha, e.j_se))
            .unwrap_or((cfg.model.alpha, cfg.model.j_se));
        let sigma2 = fit_quadratic(&series, a.tcut).ok();
        let t_spread = sigma2.and_then(|s| spreading_time(&series, s, 0.2));
        let opts = ExpFitOptions { t_spread, ..base_opts };
        let (fit, fit_error) = match fit_exponential(&series, &opts) {
            Ok(mut f) => {
                f.sigma2 = sigma2;
                points.push(RatePoint { alpha, j_se, fit: f });
                (Some(f), None)
            }
            Err(e) => (None, Some(e.to_string())),
        };
        curves.push(CurveReport {
            label,
            alpha,
            j_se,
            sigma2,
            t_spread,
            plateau_tail: estimate_plateau(&series, DEFAULT_TAIL_FRACTION).ok(),
            fit,
            fit_error,
        });
    }
    if curves.is_empty() {
        return Err(Failure {
            code: 1,
            message: format!("no echo or autocorrelation series in {}", dir.path.display()),
        });
    }
    let (decomposition, decomposition_error) = match fgr_decompose(&points) {
        Ok(d) => (Some(d), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let report = FitReport {
        run_id: dir.manifest.run_id.clone(),
        options: base_opts,
        curves,
        decomposition,
        decomposition_error,
    };
    dir.write_json("report.json", &report)?;
    write_rates(&dir.path, &points)?;

    println!("{:>8}  {:>8}  {:>12}  {:>12}  {:>10}", "alpha", "j_se", "sigma2", "rate", "rate_err");
    for c in &report.curves {
        let rate = c.fit.map_or("-".to_string(), |f| format!("{:.6}", f.rate));
        let err = c.fit.map_or("-".to_string(), |f| format!("{:.2e}", f.rate_err));
        let s2 = c.sigma2.map_or("-".to_string(), |s| format!("{s:.6}"));
        println!("{:>8}  {:>8}  {:>12}  {:>12}  {:>10}", c.alpha, c.j_se, s2, rate, err);
    }
    match &report.decomposition {
        Some(d) => println!(
            "XY coefficient {:.4} ± {:.4}, ZZ coefficient {:.4} ± {:.4} (R² {:.4})",
            d.slope_xy, d.slope_xy_err, d.slope_zz, d.slope_zz_err, d.r2
        ),
        None => println!(
            "no decomposition: {}",
            report.decomposition_error.as_deref().unwrap_or("unknown")
        ),
    }
    println!("report -> {}", dir.path.join("report.json").display());
    Ok(())
}

fn write_rates(dir: &Path, points: &[RatePoint]) -> Result<()> {
    let mut w = csv::Writer::from_path(dir.join("rates.csv"))?;
    w.write_record(["alpha", "j_se", "rate", "err"])?;
    for p in points {
        w.write_record([
            p.alpha.to_string(),
            p.j_se.to_string(),
            p.fit.rate.to_string(),
            p.fit.rate_err.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_verify() -> std::result::Result<(), Failure> {
    let checks = verify::oracle_checks()?;
    let mut failed = 0;
    for c in &checks {
        let tag = if c.passed() { "PASS" } else { "FAIL" };
        if !c.passed() {
            failed += 1;
        }
        println!("{tag}  {:<55} max error {:.3e} (tolerance {:.0e})", c.name, c.max_error, c.tolerance);
    }
    if failed > 0 {
        return Err(Failure {
            code: 1,
            message: format!("{failed} oracle check(s) failed"),
        });
    }
    Ok(())
}
