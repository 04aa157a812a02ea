//! Experiment orchestration: presets, replications, artifacts.
//!
//! A preset expands into one or more arms (an optimizer or fixed-θ baseline
//! with its own schedule and parametrization). Every arm runs the same
//! replications: replication `r` uses `SeedBundle::for_replication(seed, r)`
//! in every arm, so arms are compared under common random numbers.

pub mod aggregate;
pub mod cli;
pub mod io;
pub mod plot;
pub mod selftest;
pub mod settings;

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::channel::Parametrization;
use crate::error::{Error, Result};
use crate::izosga::{random_theta, run, run_baseline, Problem, RunOutput, WmmseSchedule};
use crate::rng::SeedBundle;

use self::aggregate::{aggregate, aggregate_files, write_summary, SummaryRow};
use self::io::{timestamp, write_theta, write_trace_file, ArmRecord, RunManifest, SeedRecord};
use self::settings::{PresetName, Scale, Settings};

/// A named experiment with its replication count, scale and config
/// overrides (a TOML table in the config-file layout).
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPreset {
    pub name: PresetName,
    pub reps: usize,
    pub scale: Scale,
    pub overrides: toml::Table,
}

impl ExperimentPreset {
    pub fn new(name: PresetName, reps: usize, scale: Scale) -> Self {
        Self { name, reps, scale, overrides: toml::Table::new() }
    }

    /// The concrete, validated settings of this preset.
    pub fn resolve(&self) -> Result<Settings> {
        let mut table = self.overrides.clone();
        let mut exp = toml::Table::new();
        exp.insert("preset".into(), toml::Value::String(self.name.to_string()));
        exp.insert("reps".into(), toml::Value::Integer(self.reps as i64));
        settings::merge(&mut table, &toml::Table::from_iter([("experiment".into(), exp.into())]));
        Settings::resolve(&table, Some(self.scale))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArmKind {
    Izosga,
    /// WMMSE with a uniformly random θ held fixed.
    Baseline,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arm {
    pub label: String,
    pub kind: ArmKind,
    pub parametrization: Parametrization,
    pub schedule: WmmseSchedule,
}

impl Arm {
    pub fn description(&self) -> String {
        let kind = match self.kind {
            ArmKind::Izosga => "izosga",
            ArmKind::Baseline => "random-theta baseline",
        };
        let irs = match self.parametrization {
            Parametrization::IdealPhase => "ideal-phase",
            Parametrization::PhaseAmplitude => "phase-amplitude",
            Parametrization::Varactor(_) => "varactor",
        };
        let schedule = match &self.schedule {
            WmmseSchedule::Constant { budget } => format!("budget {budget}"),
            WmmseSchedule::Piecewise { period, budgets } => format!("budgets {budgets:?} every {period}"),
            WmmseSchedule::Explicit { budgets } => format!("explicit schedule of {}", budgets.len()),
        };
        format!("{kind}, {irs}, {schedule}")
    }
}

pub fn budget_label(budget: usize) -> String {
    format!("budget-{budget:02}")
}

/// Arms of the preset named in `settings`.
pub fn arms(settings: &Settings) -> Vec<Arm> {
    let e = &settings.experiment;
    let period = settings.optimizer.schedule_period;
    let baseline = |p: Parametrization| Arm {
        label: "baseline".into(),
        kind: ArmKind::Baseline,
        parametrization: p,
        schedule: WmmseSchedule::constant(e.baseline_budget),
    };
    let sweep = |p: Parametrization| {
        std::iter::once(baseline(p))
            .chain(e.budgets.iter().map(move |&b| Arm {
                label: budget_label(b),
                kind: ArmKind::Izosga,
                parametrization: p,
                schedule: WmmseSchedule::constant(b),
            }))
            .collect()
    };
    let p = settings.parametrization();
    match e.preset {
        PresetName::BudgetSweep => sweep(p),
        PresetName::VaractorSweep => sweep(Parametrization::Varactor(settings.irs.varactor)),
        PresetName::BudgetSchedule => [("schedule-a", WmmseSchedule::schedule_a(period)), ("schedule-b", WmmseSchedule::schedule_b(period))]
            .into_iter()
            .map(|(label, schedule)| Arm { label: label.into(), kind: ArmKind::Izosga, parametrization: p, schedule })
            .collect(),
        PresetName::BaselineRandomPhase => vec![baseline(p)],
        PresetName::Custom => vec![Arm {
            label: "run".into(),
            kind: ArmKind::Izosga,
            parametrization: p,
            schedule: settings.schedule(),
        }],
    }
}

/// One replication of one arm.
pub fn run_replication(settings: &Settings, arm: &Arm, seeds: &SeedBundle) -> Result<RunOutput> {
    let problem = Problem::new(settings.network_config(), arm.parametrization)?;
    let opt = settings.optimizer_config(arm.schedule.clone());
    let oracle = settings.oracle_config();
    match arm.kind {
        ArmKind::Izosga => run(&problem, &opt, &oracle, seeds, &problem.space.default_theta()),
        ArmKind::Baseline => run_baseline(&problem, &opt, &oracle, seeds, &random_theta(&problem.space, seeds)),
    }
}

pub fn replication_seeds(master: u64, reps: usize) -> Vec<SeedBundle> {
    (0..reps as u64).map(|r| SeedBundle::for_replication(master, r)).collect()
}

#[derive(Debug, Clone)]
pub struct ArmRun {
    pub arm: Arm,
    pub outputs: Vec<RunOutput>,
}

impl ArmRun {
    /// Final-iteration value of each replication's moving-average sumrate.
    pub fn final_ma(&self) -> Vec<f64> {
        self.outputs.iter().map(|o| o.trace.last().map_or(f64::NAN, |r| r.sumrate_ma)).collect()
    }

    pub fn sumrates(&self) -> Vec<Vec<f64>> {
        self.outputs.iter().map(|o| o.trace.iter().map(|r| r.sumrate_t).collect()).collect()
    }
}

/// Runs every (arm, replication) pair, at most `jobs` at a time.
pub fn execute(settings: &Settings, seeds: &[SeedBundle], jobs: Option<usize>) -> Result<Vec<ArmRun>> {
    let arms = arms(settings);
    let work: Vec<(usize, usize)> = (0..arms.len()).flat_map(|a| (0..seeds.len()).map(move |r| (a, r))).collect();
    let go = || -> Vec<Result<RunOutput>> {
        work.par_iter().map(|&(a, r)| run_replication(settings, &arms[a], &seeds[r])).collect()
    };
    let results = match jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?
            .install(go),
        None => go(),
    };
    let mut results = results.into_iter();
    arms.into_iter()
        .map(|arm| {
            let outputs = results.by_ref().take(seeds.len()).collect::<Result<Vec<_>>>()?;
            Ok(ArmRun { arm, outputs })
        })
        .collect()
}

pub fn trace_name(arm: &str, rep: usize) -> String {
    format!("{arm}/rep-{rep:03}.csv")
}

pub fn theta_name(arm: &str, rep: usize) -> String {
    format!("{arm}/rep-{rep:03}.theta")
}

/// Writes per-replication CSVs and θ files, per-arm summaries and the
/// manifest into `dir`.
pub fn persist(dir: &Path, settings: &Settings, master_seed: u64, seeds: &[SeedBundle], runs: &[ArmRun]) -> Result<RunManifest> {
    fs::create_dir_all(dir)?;
    let mut records = Vec::with_capacity(runs.len());
    for run in runs {
        fs::create_dir_all(dir.join(&run.arm.label))?;
        let mut record = ArmRecord {
            label: run.arm.label.clone(),
            description: run.arm.description(),
            traces: Vec::new(),
            thetas: Vec::new(),
        };
        for (rep, out) in run.outputs.iter().enumerate() {
            let (csv, theta) = (trace_name(&run.arm.label, rep), theta_name(&run.arm.label, rep));
            write_trace_file(&dir.join(&csv), &out.trace)?;
            write_theta(&dir.join(&theta), &out.theta_out)?;
            record.traces.push(csv);
            record.thetas.push(theta);
        }
        let summary = summarize(run, settings.experiment.aggregate_window)?;
        write_summary(fs::File::create(dir.join(&run.arm.label).join("summary.csv"))?, &summary)?;
        records.push(record);
    }
    let manifest = RunManifest {
        artifact: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        created: timestamp(),
        preset: settings.experiment.preset,
        scale: settings.experiment.scale,
        reps: seeds.len(),
        master_seed,
        aggregate_window: settings.experiment.aggregate_window,
        arms: records,
        seeds: seeds.iter().enumerate().map(|(r, s)| SeedRecord::new(r, s)).collect(),
        config: settings.clone(),
    };
    manifest.write(&dir.join(MANIFEST_NAME))?;
    Ok(manifest)
}

pub const MANIFEST_NAME: &str = "manifest.toml";
pub const PLOT_NAME: &str = "sumrate.svg";

pub fn summarize(run: &ArmRun, window: usize) -> Result<Vec<SummaryRow>> {
    aggregate(&run.sumrates(), window)
}

/// Chart of the replication CSVs listed in the manifest of `dir`.
pub fn plot_runs(dir: &Path, manifest: &RunManifest) -> Result<PathBuf> {
    let series = manifest
        .arms
        .iter()
        .map(|a| {
            let paths: Vec<PathBuf> = a.traces.iter().map(|t| dir.join(t)).collect();
            Ok((a.label.clone(), aggregate_files(&paths, manifest.aggregate_window)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let path = dir.join(PLOT_NAME);
    let title = format!("{} ({} scale, {} reps)", manifest.preset, manifest.scale, manifest.reps);
    plot::write_svg(&path, &title, &series)?;
    Ok(path)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayReport {
    pub compared: usize,
    /// Files whose bytes differ from the original run.
    pub mismatched: Vec<String>,
}

/// Re-runs the manifest at `manifest_path` into `out` and compares every
/// replication CSV with the original byte for byte.
pub fn replay(manifest_path: &Path, out: &Path, jobs: Option<usize>) -> Result<ReplayReport> {
    let manifest = RunManifest::read(manifest_path)?;
    let original = manifest_path.parent().unwrap_or(Path::new("."));
    let seeds: Vec<SeedBundle> = manifest.seeds.iter().map(SeedRecord::bundle).collect();
    let runs = execute(&manifest.config, &seeds, jobs)?;
    let fresh = persist(out, &manifest.config, manifest.master_seed, &seeds, &runs)?;
    let mut report = ReplayReport { compared: 0, mismatched: Vec::new() };
    for (old, new) in manifest.arms.iter().zip(&fresh.arms) {
        for (a, b) in old.traces.iter().zip(&new.traces) {
            report.compared += 1;
            if fs::read(original.join(a))? != fs::read(out.join(b))? {
                report.mismatched.push(a.clone());
            }
        }
    }
    if manifest.arms.len() != fresh.arms.len() {
        report.mismatched.push("arm list".into());
    }
    Ok(report)
}
