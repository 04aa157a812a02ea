//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 run failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::diagnostics::{moreau_grad_norm, DiagnosticReport, MoreauConfig};
use crate::error::{Error, Result};
use crate::izosga::Problem;
use crate::rng::SeedBundle;

use super::aggregate::{aggregate_files, write_summary};
use super::io::{read_theta, read_trace};
use super::settings::{PresetName, Scale, Settings};
use super::{execute, persist, plot_runs, replay, replication_seeds, ArmRun};

pub const SEED_ENV: &str = "IZOSGA_SEED";

#[derive(Parser, Debug)]
#[command(name = "izosga", version, about = "IRS tuning by zeroth-order quasi-gradient ascent over a WMMSE oracle")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Single iZoSGA experiment from the config file.
    Run(RunArgs),
    /// One curve per WMMSE budget plus the random-phase baseline.
    Sweep(RunArgs),
    /// The two piecewise-constant budget schedules.
    Schedule(RunArgs),
    /// Budget sweep with the varactor IRS model.
    Varactor(RunArgs),
    /// WMMSE with a random fixed θ.
    Baseline(RunArgs),
    /// Moreau-envelope stationarity and ε̄ report for a saved θ.
    Diagnose(DiagnoseArgs),
    /// Quick built-in property checks.
    Selftest,
    /// Re-run a manifest and compare the CSVs byte for byte.
    Replay(ReplayArgs),
    /// Mean and standard error across replication CSVs.
    Aggregate(AggregateArgs),
}

#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// TOML config file; missing keys take the scale defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (falls back to IZOSGA_SEED, then the config).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    scale: Option<ScaleArg>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    reps: Option<usize>,
    /// Output directory [default: runs/<preset>-<scale>]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write an SVG chart of the moving-average sumrate.
    #[arg(long)]
    plot: bool,
    /// Concurrent replications [default: all cores]
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args, Debug)]
struct DiagnoseArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// θ file written by a run (one value per line).
    #[arg(long)]
    theta: PathBuf,
    /// Run CSV whose gap column supplies ε̄.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Envelope parameter λ; repeat or comma-separate for a sensitivity sweep.
    #[arg(long, value_delimiter = ',', default_value = "10")]
    lambda: Vec<f64>,
    /// Frozen states of nature N_ω.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    probes: Option<usize>,
    #[arg(long)]
    prox_iterations: Option<usize>,
}

#[derive(Args, Debug)]
struct ReplayArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args, Debug)]
struct AggregateArgs {
    #[arg(long, default_value_t = 200)]
    window: usize,
    #[arg(required = true)]
    csv: Vec<PathBuf>,
}

#[derive(clap::ValueEnum, Debug, Clone, Copy)]
enum ScaleArg {
    Desk,
    Paper,
}

impl From<ScaleArg> for Scale {
    fn from(s: ScaleArg) -> Self {
        match s {
            ScaleArg::Desk => Scale::Desk,
            ScaleArg::Paper => Scale::Paper,
        }
    }
}

/// Errors split by exit code.
enum Failure {
    Usage(Error),
    Run(Error),
}

fn usage<T>(r: Result<T>) -> std::result::Result<T, Failure> {
    r.map_err(Failure::Usage)
}

fn running<T>(r: Result<T>) -> std::result::Result<T, Failure> {
    r.map_err(Failure::Run)
}

pub fn main() -> ExitCode {
    main_from(std::env::args_os())
}

pub fn main_from<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Run(e)) => {
            eprintln!("run failed: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> std::result::Result<(), Failure> {
    match command {
        Command::Run(a) => experiment(PresetName::Custom, a),
        Command::Sweep(a) => experiment(PresetName::BudgetSweep, a),
        Command::Schedule(a) => experiment(PresetName::BudgetSchedule, a),
        Command::Varactor(a) => experiment(PresetName::VaractorSweep, a),
        Command::Baseline(a) => experiment(PresetName::BaselineRandomPhase, a),
        Command::Diagnose(a) => diagnose(a),
        Command::Selftest => {
            let ok = running(super::selftest::run_selftest(&mut std::io::stdout()))?;
            if ok {
                Ok(())
            } else {
                Err(Failure::Run(Error::InvalidConfig("selftest reported failures".into())))
            }
        }
        Command::Replay(a) => {
            let report = running(replay(&a.manifest, &a.out, a.jobs))?;
            println!("compared {} traces, {} mismatched", report.compared, report.mismatched.len());
            for m in &report.mismatched {
                println!("mismatch: {m}");
            }
            if report.mismatched.is_empty() {
                Ok(())
            } else {
                Err(Failure::Run(Error::Parse("replay produced different CSVs".into())))
            }
        }
        Command::Aggregate(a) => {
            let rows = usage(aggregate_files(&a.csv, a.window))?;
            usage(write_summary(std::io::stdout().lock(), &rows))
        }
    }
}

fn load_overrides(path: Option<&Path>) -> Result<toml::Table> {
    match path {
        None => Ok(toml::Table::new()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", p.display())))?;
            text.parse().map_err(|e| Error::Parse(format!("{}: {e}", p.display())))
        }
    }
}

fn seed_override(flag: Option<u64>) -> Result<Option<u64>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::InvalidConfig(format!("{SEED_ENV}=`{v}` is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

/// Config file, then scale, seed and replication flags.
fn resolve_settings(common: &CommonArgs, preset: PresetName, reps: Option<usize>) -> Result<Settings> {
    let mut overrides = load_overrides(common.config.as_deref())?;
    let mut exp = toml::Table::new();
    exp.insert("preset".into(), toml::Value::String(preset.to_string()));
    if let Some(seed) = seed_override(common.seed)? {
        let seed = i64::try_from(seed)
            .map_err(|_| Error::InvalidConfig(format!("seed {seed} exceeds the supported range")))?;
        exp.insert("seed".into(), toml::Value::Integer(seed));
    }
    if let Some(r) = reps {
        exp.insert("reps".into(), toml::Value::Integer(r as i64));
    }
    super::settings::merge(&mut overrides, &toml::Table::from_iter([("experiment".into(), exp.into())]));
    Settings::resolve(&overrides, common.scale.map(Into::into))
}

fn experiment(preset: PresetName, args: RunArgs) -> std::result::Result<(), Failure> {
    let settings = usage(resolve_settings(&args.common, preset, args.reps))?;
    let dir = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("runs/{}-{}", preset, settings.experiment.scale)));
    let seeds = replication_seeds(settings.experiment.seed, settings.experiment.reps);
    let runs = running(execute(&settings, &seeds, args.jobs))?;
    let manifest = running(persist(&dir, &settings, settings.experiment.seed, &seeds, &runs))?;
    if args.plot {
        let path = running(plot_runs(&dir, &manifest))?;
        println!("plot: {}", path.display());
    }
    print_summary(&runs);
    println!("artifacts: {}", dir.display());
    Ok(())
}

fn print_summary(runs: &[ArmRun]) {
    for r in runs {
        let finals = r.final_ma();
        let se = if finals.len() > 1 { crate::stats::std_err(&finals) } else { 0.0 };
        println!(
            "{:<12} final moving-average sumrate {:.4} ± {:.4} ({} reps)",
            r.arm.label,
            crate::stats::mean(&finals),
            se,
            finals.len()
        );
    }
}

#[derive(Serialize)]
struct DiagnoseOutput<'a> {
    theta: String,
    reports: &'a [DiagnosticReport],
}

fn diagnose(args: DiagnoseArgs) -> std::result::Result<(), Failure> {
    let settings = usage(resolve_settings(&args.common, PresetName::Custom, None))?;
    let theta = usage(read_theta(&args.theta))?;
    let epsilon = match &args.trace {
        Some(p) => {
            let gaps: Vec<f64> = usage(read_trace(p))?.iter().filter_map(|r| r.gap_estimate_t).collect();
            (gaps.len(), (!gaps.is_empty()).then(|| crate::stats::mean(&gaps)))
        }
        None => (0, None),
    };
    let problem = usage(Problem::new(settings.network_config(), settings.parametrization()))?;
    usage(problem.space.check(&theta))?;
    let seeds = SeedBundle::from_master(settings.experiment.seed);
    let base = MoreauConfig::default();
    let mut reports = Vec::new();
    for &lambda in &args.lambda {
        let cfg = MoreauConfig {
            lambda,
            samples: args.samples.unwrap_or(base.samples),
            probes_per_sample: args.probes.unwrap_or(base.probes_per_sample),
            prox_iterations: args.prox_iterations.unwrap_or(base.prox_iterations),
            ..base
        };
        let est = running(moreau_grad_norm(&theta, &cfg, &problem, &seeds))?;
        reports.push(DiagnosticReport {
            moreau_estimate: est.value,
            lambda,
            epsilon_bar: epsilon.1,
            gap_measurements: epsilon.0,
            samples: cfg.samples,
            probes_per_sample: cfg.probes_per_sample,
            prox_iterations: est.prox_iterations,
            seeds,
        });
    }
    let out = DiagnoseOutput { theta: args.theta.display().to_string(), reports: &reports };
    println!("{}", serde_json::to_string_pretty(&out).map_err(|e| Failure::Run(Error::Parse(e.to_string())))?);
    Ok(())
}
