//! Projected zeroth-order stochastic quasi-gradient ascent over Θ with an
//! inexact WMMSE oracle in the inner loop.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{compose_channel, ChannelModel, ParamSpace, Parametrization};
use crate::config::NetworkConfig;
use crate::diagnostics::ErrorLedger;
use crate::error::{Error, Result};
use crate::rng::{mix64, SeedBundle};
use crate::sumrate::{cogradient, Precoder};
use crate::wmmse::{measure_gap_with, wmmse_solve, GapOptions, InitStrategy, OracleConfig, OracleReport};
use crate::zo::{channel_probe_pair, quasi_gradient, ProbeDraw};

/// Budgets of the two decreasing schedules (one stage per period).
pub const SCHEDULE_A: [usize; 5] = [20, 10, 7, 6, 5];
pub const SCHEDULE_B: [usize; 5] = [20, 5, 4, 3, 2];

/// WMMSE iteration budget as a function of the outer iteration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WmmseSchedule {
    Constant { budget: usize },
    /// `budgets[t / period]`, holding the last stage afterwards.
    Piecewise { period: usize, budgets: Vec<usize> },
    /// One budget per outer iteration.
    Explicit { budgets: Vec<usize> },
}

impl WmmseSchedule {
    pub fn constant(budget: usize) -> Self {
        Self::Constant { budget }
    }

    pub fn schedule_a(period: usize) -> Self {
        Self::Piecewise { period, budgets: SCHEDULE_A.to_vec() }
    }

    pub fn schedule_b(period: usize) -> Self {
        Self::Piecewise { period, budgets: SCHEDULE_B.to_vec() }
    }

    pub fn validate(&self, horizon: usize) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        match self {
            Self::Constant { budget } if *budget == 0 => bad("schedule budget must be >= 1"),
            Self::Piecewise { period, budgets } => {
                if *period == 0 || budgets.is_empty() || budgets.contains(&0) {
                    bad("piecewise schedule needs a positive period and positive budgets")
                } else {
                    Ok(())
                }
            }
            Self::Explicit { budgets } => {
                if budgets.len() <= horizon {
                    Err(Error::UndefinedIndex(budgets.len()))
                } else if budgets.contains(&0) {
                    bad("schedule budget must be >= 1")
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Outer iterations at which the budget changes.
    pub fn switch_points(&self, horizon: usize) -> Vec<usize> {
        (1..=horizon)
            .filter(|&t| schedule_eval(self, t).ok() != schedule_eval(self, t - 1).ok())
            .collect()
    }
}

/// Budget for outer iteration `t`.
pub fn schedule_eval(schedule: &WmmseSchedule, t: usize) -> Result<usize> {
    match schedule {
        WmmseSchedule::Constant { budget } => Ok(*budget),
        WmmseSchedule::Piecewise { period, budgets } => {
            if *period == 0 || budgets.is_empty() {
                return Err(Error::UndefinedIndex(t));
            }
            Ok(budgets[(t / period).min(budgets.len() - 1)])
        }
        WmmseSchedule::Explicit { budgets } => budgets.get(t).copied().ok_or(Error::UndefinedIndex(t)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReturnRule {
    /// θ_{t*} with t* uniform on {0, …, T}.
    UniformRandom,
    Final,
    /// Iterate with the highest moving-average sumrate.
    BestTracked,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IzosgaConfig {
    pub step_size: f64,
    pub smoothing: f64,
    pub horizon: usize,
    pub schedule: WmmseSchedule,
    pub return_rule: ReturnRule,
    /// Use η/√(t+1) instead of a constant step.
    pub step_decay: bool,
    pub probes_per_step: usize,
    /// Measure the oracle gap every `gap_cadence` iterations; 0 disables.
    pub gap_cadence: usize,
    pub reference_budget: usize,
    pub ma_window: usize,
    /// Keep θ_t in every trace record.
    pub keep_thetas: bool,
}

impl IzosgaConfig {
    pub fn new(step_size: f64, smoothing: f64, horizon: usize, schedule: WmmseSchedule) -> Self {
        Self {
            step_size,
            smoothing,
            horizon,
            schedule,
            return_rule: ReturnRule::Final,
            step_decay: false,
            probes_per_step: 1,
            gap_cadence: 0,
            reference_budget: 200,
            ma_window: 200,
            keep_thetas: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step_size >= 0.0 && self.step_size.is_finite()) {
            return Err(Error::InvalidConfig(format!("step size {} must be >= 0", self.step_size)));
        }
        if !(self.smoothing > 0.0 && self.smoothing.is_finite()) {
            return Err(Error::InvalidConfig(format!("smoothing {} must be > 0", self.smoothing)));
        }
        if self.probes_per_step == 0 || self.ma_window == 0 || self.reference_budget == 0 {
            return Err(Error::InvalidConfig("probes, window and reference budget must be >= 1".into()));
        }
        self.schedule.validate(self.horizon)
    }
}

/// `T = ceil(c_T √S ε⁻⁴)`.
pub fn derived_horizon(c_t: f64, num_params: usize, tolerance: f64) -> usize {
    (c_t * (num_params as f64).sqrt() * tolerance.powi(-4)).ceil() as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterateRecord {
    pub t: usize,
    pub theta_t: Option<Vec<f64>>,
    pub theta_norm: f64,
    pub sumrate_t: f64,
    pub sumrate_ma: f64,
    pub wmmse_iters_t: usize,
    pub gap_estimate_t: Option<f64>,
    pub clamp_events_t: usize,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    /// Iterate selected by the return rule.
    pub theta_out: Vec<f64>,
    pub t_out: usize,
    /// θ_T.
    pub theta_final: Vec<f64>,
    pub trace: Vec<IterateRecord>,
    pub ledger: ErrorLedger,
}

/// A network together with the IRS parametrization being tuned.
#[derive(Debug, Clone)]
pub struct Problem {
    pub model: ChannelModel,
    pub space: ParamSpace,
}

impl Problem {
    pub fn new(network: NetworkConfig, parametrization: Parametrization) -> Result<Self> {
        if let Parametrization::Varactor(v) = parametrization {
            v.validate()?;
        }
        let space = ParamSpace::new(parametrization, network.num_irs_elements);
        Ok(Self { model: ChannelModel::new(network)?, space })
    }

    pub fn network(&self) -> &NetworkConfig {
        self.model.config()
    }
}

/// Euclidean projection onto the box Θ.
pub fn project_theta(theta: &[f64], space: &ParamSpace) -> Vec<f64> {
    theta
        .iter()
        .zip(space.lo.iter().zip(&space.hi))
        .map(|(&x, (&lo, &hi))| x.clamp(lo, hi))
        .collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Trailing moving average with a fixed summation order.
struct MovingAverage {
    window: usize,
    values: Vec<f64>,
}

impl MovingAverage {
    fn push(&mut self, x: f64) -> f64 {
        self.values.push(x);
        let start = self.values.len().saturating_sub(self.window);
        let tail = &self.values[start..];
        tail.iter().sum::<f64>() / tail.len() as f64
    }
}

/// Shared per-iteration work: draw ω_t, compose H(θ_t, ω_t), call the oracle
/// and measure the gap on cadence.
struct Stage<'a> {
    problem: &'a Problem,
    opt: &'a IzosgaConfig,
    oracle_cfg: &'a OracleConfig,
    seeds: &'a SeedBundle,
}

struct StageOutput {
    omega: crate::channel::StateOfNature,
    h: crate::channel::EffectiveChannel,
    report: OracleReport,
    gap: Option<f64>,
}

impl Stage<'_> {
    fn evaluate(&self, t: usize, theta: &[f64], warm: Option<&Precoder>) -> Result<StageOutput> {
        let network = self.problem.network();
        let omega = self.problem.model.sample_tagged(self.seeds.omega, t as u64);
        let gamma = self.problem.space.reflection(theta)?;
        let h = compose_channel(&gamma, &omega)?;
        let oc = OracleConfig {
            max_iterations: schedule_eval(&self.opt.schedule, t)?,
            ..*self.oracle_cfg
        };
        let warm = if oc.init == InitStrategy::WarmStart { warm } else { None };
        let report = wmmse_solve(&h, network, &oc, warm)?;
        let gap = if self.opt.gap_cadence > 0 && t.is_multiple_of(self.opt.gap_cadence) {
            let opts = GapOptions {
                seed: mix64(self.seeds.omega ^ t as u64),
                ..GapOptions::new(self.opt.reference_budget)
            };
            Some(measure_gap_with(&h, network, &report.precoder, &opts)?)
        } else {
            None
        };
        Ok(StageOutput { omega, h, report, gap })
    }
}

/// Runs T+1 outer iterations from `theta0`.
pub fn run(
    problem: &Problem,
    opt: &IzosgaConfig,
    oracle_cfg: &OracleConfig,
    seeds: &SeedBundle,
    theta0: &[f64],
) -> Result<RunOutput> {
    opt.validate()?;
    oracle_cfg.validate()?;
    problem.space.check(theta0)?;
    let network = problem.network();
    let stage = Stage { problem, opt, oracle_cfg, seeds };
    let dim = problem.space.dim();

    let t_star = seeds.select_rng().random_range(0..=opt.horizon);
    let mut probe_rng = seeds.probe_rng();
    let mut ma = MovingAverage { window: opt.ma_window, values: Vec::with_capacity(opt.horizon + 1) };
    let mut ledger = ErrorLedger::new(opt.gap_cadence);
    let mut trace = Vec::with_capacity(opt.horizon + 1);
    let mut theta = theta0.to_vec();
    let mut warm: Option<Precoder> = None;
    let mut selected = theta.clone();
    let mut best = (f64::NEG_INFINITY, theta.clone(), 0);

    for t in 0..=opt.horizon {
        let out = stage.evaluate(t, &theta, warm.as_ref())?;
        let g = cogradient(&out.report.precoder, &out.h, network)?;

        let mut d = vec![0.0; dim];
        let mut clamps = 0;
        for _ in 0..opt.probes_per_step {
            let u = ProbeDraw::sample(&mut probe_rng, dim);
            let pair = channel_probe_pair(&problem.space, &theta, &out.omega, &u, opt.smoothing)?;
            clamps += pair.clamp_events;
            let q = quasi_gradient(&pair.plus, &pair.minus, &u, opt.smoothing, &g)?;
            for (acc, x) in d.iter_mut().zip(q.d) {
                *acc += x;
            }
        }
        if opt.probes_per_step > 1 {
            let inv = 1.0 / opt.probes_per_step as f64;
            d.iter_mut().for_each(|x| *x *= inv);
        }
        if d.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("quasi-gradient"));
        }

        let f = out.report.achieved_sumrate;
        let f_ma = ma.push(f);
        ledger.track(t, out.gap);
        if t == t_star {
            selected = theta.clone();
        }
        if f_ma > best.0 {
            best = (f_ma, theta.clone(), t);
        }
        trace.push(IterateRecord {
            t,
            theta_t: opt.keep_thetas.then(|| theta.clone()),
            theta_norm: norm(&theta),
            sumrate_t: f,
            sumrate_ma: f_ma,
            wmmse_iters_t: out.report.iterations_used,
            gap_estimate_t: out.gap,
            clamp_events_t: clamps,
        });

        if t < opt.horizon {
            let eta = if opt.step_decay {
                opt.step_size / ((t + 1) as f64).sqrt()
            } else {
                opt.step_size
            };
            let stepped: Vec<f64> = theta.iter().zip(&d).map(|(x, g)| x + eta * g).collect();
            theta = project_theta(&stepped, &problem.space);
        }
        warm = Some(out.report.precoder);
    }

    let (theta_out, t_out) = match opt.return_rule {
        ReturnRule::UniformRandom => (selected, t_star),
        ReturnRule::Final => (theta.clone(), opt.horizon),
        ReturnRule::BestTracked => (best.1, best.2),
    };
    Ok(RunOutput { theta_out, t_out, theta_final: theta, trace, ledger })
}

/// WMMSE with IRS parameters frozen at `theta`: the unoptimized baseline.
pub fn run_baseline(
    problem: &Problem,
    opt: &IzosgaConfig,
    oracle_cfg: &OracleConfig,
    seeds: &SeedBundle,
    theta: &[f64],
) -> Result<RunOutput> {
    opt.validate()?;
    oracle_cfg.validate()?;
    problem.space.check(theta)?;
    let stage = Stage { problem, opt, oracle_cfg, seeds };
    let mut ma = MovingAverage { window: opt.ma_window, values: Vec::with_capacity(opt.horizon + 1) };
    let mut ledger = ErrorLedger::new(opt.gap_cadence);
    let mut trace = Vec::with_capacity(opt.horizon + 1);
    let theta_norm = norm(theta);
    let mut warm: Option<Precoder> = None;
    for t in 0..=opt.horizon {
        let out = stage.evaluate(t, theta, warm.as_ref())?;
        let f = out.report.achieved_sumrate;
        ledger.track(t, out.gap);
        trace.push(IterateRecord {
            t,
            theta_t: opt.keep_thetas.then(|| theta.to_vec()),
            theta_norm,
            sumrate_t: f,
            sumrate_ma: ma.push(f),
            wmmse_iters_t: out.report.iterations_used,
            gap_estimate_t: out.gap,
            clamp_events_t: 0,
        });
        warm = Some(out.report.precoder);
    }
    Ok(RunOutput {
        theta_out: theta.to_vec(),
        t_out: opt.horizon,
        theta_final: theta.to_vec(),
        trace,
        ledger,
    })
}

/// A uniformly random point of Θ from the replication's init stream.
pub fn random_theta(space: &ParamSpace, seeds: &SeedBundle) -> Vec<f64> {
    space.random_theta(&mut seeds.init_rng())
}
