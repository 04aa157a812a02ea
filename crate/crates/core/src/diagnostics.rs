//! Near-stationarity and oracle-error diagnostics.
//!
//! The stationarity measure is the gradient norm of the Moreau envelope of
//! `φ = −f + δ_Θ`, `‖∇φ^{1/λ}(θ)‖ = λ‖θ − θ̂‖`, where θ̂ solves the prox
//! subproblem `min_{θ'∈Θ} −f̂(θ') + (λ/2)‖θ − θ'‖²`. `f̂` is a sample average
//! over a frozen set of states of nature and probe directions, so the
//! subproblem is deterministic.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{compose_channel, ParamSpace, StateOfNature};
use crate::error::{Error, Result};
use crate::izosga::{project_theta, Problem};
use crate::rng::{mix64, SeedBundle};
use crate::sumrate::{cogradient, Precoder};
use crate::wmmse::{wmmse_solve, InitStrategy, OracleConfig};
use crate::zo::{channel_probe_pair, quasi_gradient, ProbeDraw};

/// Running mean ε̄ of the measured oracle gaps.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorLedger {
    pub cadence: usize,
    /// `(t, ε̃_t)` for every measured iteration.
    pub entries: Vec<(usize, f64)>,
    /// Iterations without a measurement; excluded from the mean.
    pub skipped: usize,
    mean: f64,
}

impl ErrorLedger {
    pub fn new(cadence: usize) -> Self {
        Self { cadence, ..Self::default() }
    }

    pub fn track(&mut self, t: usize, gap: Option<f64>) {
        match gap {
            Some(g) => {
                let g = g.max(0.0);
                let n = self.entries.len() as f64;
                self.mean = (n * self.mean + g) / (n + 1.0);
                self.entries.push((t, g));
            }
            None => self.skipped += 1,
        }
    }

    /// ε̄ over the measured iterations; `None` before the first measurement.
    pub fn epsilon_bar(&self) -> Option<f64> {
        (!self.entries.is_empty()).then_some(self.mean)
    }

    pub fn count(&self) -> usize {
        self.entries.len()
    }

    /// ε̄ recomputed from the stored entries.
    pub fn recompute(&self) -> Option<f64> {
        (!self.entries.is_empty())
            .then(|| self.entries.iter().map(|e| e.1).sum::<f64>() / self.entries.len() as f64)
    }
}

pub fn track_epsilon_bar(mut ledger: ErrorLedger, gap: f64, t: usize) -> ErrorLedger {
    ledger.track(t, Some(gap));
    ledger
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoreauConfig {
    pub lambda: f64,
    pub prox_iterations: usize,
    /// Prox step as a fraction of 1/λ.
    pub prox_step: f64,
    /// Stop when the gradient mapping falls below `tolerance · (1 + initial)`.
    pub tolerance: f64,
    /// Frozen states of nature N_ω.
    pub samples: usize,
    pub probes_per_sample: usize,
    pub smoothing: f64,
    /// WMMSE sweeps per inner solve (warm-started after the first).
    pub inner_budget: usize,
}

impl Default for MoreauConfig {
    fn default() -> Self {
        Self {
            lambda: 10.0,
            prox_iterations: 200,
            prox_step: 0.5,
            tolerance: 1e-6,
            samples: 64,
            probes_per_sample: 16,
            smoothing: 1e-4,
            inner_budget: 50,
        }
    }
}

impl MoreauConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lambda > 0.0
            && self.prox_iterations > 0
            && self.prox_step > 0.0
            && self.tolerance > 0.0
            && self.samples > 0
            && self.probes_per_sample > 0
            && self.smoothing > 0.0
            && self.inner_budget > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid Moreau configuration {self:?}")))
        }
    }
}

/// Something whose ascent direction can be evaluated at any θ.
pub trait ProxObjective {
    /// Estimate of ∇f(θ) for the function being maximized.
    fn gradient(&mut self, theta: &[f64]) -> Result<Vec<f64>>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProxSolution {
    pub theta_hat: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Projected gradient on `−f(θ') + (λ/2)‖θ − θ'‖²` over Θ.
pub fn prox_solve<O: ProxObjective + ?Sized>(
    obj: &mut O,
    theta: &[f64],
    space: &ParamSpace,
    cfg: &MoreauConfig,
) -> Result<ProxSolution> {
    cfg.validate()?;
    let gamma = cfg.prox_step / cfg.lambda;
    let mut cur = theta.to_vec();
    let mut threshold = None;
    let mut residual = f64::INFINITY;
    for it in 1..=cfg.prox_iterations {
        let gf = obj.gradient(&cur)?;
        let step: Vec<f64> = cur
            .iter()
            .zip(&gf)
            .zip(theta)
            .map(|((c, g), t)| c - gamma * (-g + cfg.lambda * (c - t)))
            .collect();
        let next = project_theta(&step, space);
        residual = cur.iter().zip(&next).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() / gamma;
        if !residual.is_finite() {
            return Err(Error::NonFinite("prox iterate"));
        }
        cur = next;
        let thr = *threshold.get_or_insert(cfg.tolerance * (1.0 + residual));
        if residual <= thr {
            return Ok(ProxSolution { theta_hat: cur, iterations: it, residual });
        }
    }
    Err(Error::ProxNotConverged { residual, iterations: cfg.prox_iterations })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoreauEstimate {
    /// λ‖θ − θ̂‖.
    pub value: f64,
    pub lambda: f64,
    pub samples: usize,
    pub probes_per_sample: usize,
    pub prox_iterations: usize,
    pub residual: f64,
}

pub fn moreau_from_objective<O: ProxObjective + ?Sized>(
    obj: &mut O,
    theta: &[f64],
    space: &ParamSpace,
    cfg: &MoreauConfig,
) -> Result<MoreauEstimate> {
    space.check(theta)?;
    let sol = prox_solve(obj, theta, space, cfg)?;
    let diff: Vec<f64> = theta.iter().zip(&sol.theta_hat).map(|(a, b)| a - b).collect();
    Ok(MoreauEstimate {
        value: cfg.lambda * norm(&diff),
        lambda: cfg.lambda,
        samples: cfg.samples,
        probes_per_sample: cfg.probes_per_sample,
        prox_iterations: sol.iterations,
        residual: sol.residual,
    })
}

/// Sample-average sumrate objective with common random numbers: the states
/// of nature and the probe directions are drawn once and reused at every θ.
pub struct SampledObjective<'a> {
    problem: &'a Problem,
    omegas: Vec<StateOfNature>,
    probes: Vec<Vec<ProbeDraw>>,
    warm: Vec<Option<Precoder>>,
    smoothing: f64,
    inner_budget: usize,
}

/// Channel draws for diagnostics live far away from the run's own tags.
const DIAGNOSTIC_TAG_BASE: u64 = 1 << 40;

impl<'a> SampledObjective<'a> {
    pub fn new(problem: &'a Problem, cfg: &MoreauConfig, seeds: &SeedBundle) -> Self {
        let omegas = (0..cfg.samples as u64)
            .map(|i| problem.model.sample_tagged(seeds.omega, DIAGNOSTIC_TAG_BASE + i))
            .collect();
        let mut rng = crate::rng::SeedBundle { probe: mix64(seeds.probe ^ 0xD1A6), ..*seeds }.probe_rng();
        let dim = problem.space.dim();
        let probes = (0..cfg.samples)
            .map(|_| (0..cfg.probes_per_sample).map(|_| ProbeDraw::sample(&mut rng, dim)).collect())
            .collect();
        Self {
            problem,
            omegas,
            probes,
            warm: vec![None; cfg.samples],
            smoothing: cfg.smoothing,
            inner_budget: cfg.inner_budget,
        }
    }
}

impl ProxObjective for SampledObjective<'_> {
    fn gradient(&mut self, theta: &[f64]) -> Result<Vec<f64>> {
        let problem = self.problem;
        let network = problem.network();
        let space = &problem.space;
        let mu = self.smoothing;
        let gamma = space.probe_reflection(theta).0;
        let oc = OracleConfig {
            init: InitStrategy::WarmStart,
            ..OracleConfig::with_budget(self.inner_budget)
        };
        let per_sample: Vec<Result<Vec<f64>>> = self
            .omegas
            .par_iter()
            .zip(self.probes.par_iter())
            .zip(self.warm.par_iter_mut())
            .map(|((omega, probes), warm)| {
                let h = compose_channel(&gamma, omega)?;
                let rep = wmmse_solve(&h, network, &oc, warm.as_ref())?;
                let g = cogradient(&rep.precoder, &h, network)?;
                let mut acc = vec![0.0; theta.len()];
                for u in probes {
                    let pair = channel_probe_pair(space, theta, omega, u, mu)?;
                    let d = quasi_gradient(&pair.plus, &pair.minus, u, mu, &g)?;
                    acc.iter_mut().zip(&d.d).for_each(|(a, x)| *a += x);
                }
                *warm = Some(rep.precoder);
                Ok(acc)
            })
            .collect();
        // Canonical reduction order: sample index.
        let mut total = vec![0.0; theta.len()];
        for r in per_sample {
            total.iter_mut().zip(r?).for_each(|(a, x)| *a += x);
        }
        let scale = 1.0 / (self.omegas.len() * self.probes[0].len()) as f64;
        total.iter_mut().for_each(|x| *x *= scale);
        Ok(total)
    }
}

/// Estimate of ‖∇φ^{1/λ}(θ)‖ for the network objective.
pub fn moreau_grad_norm(
    theta: &[f64],
    cfg: &MoreauConfig,
    problem: &Problem,
    seeds: &SeedBundle,
) -> Result<MoreauEstimate> {
    cfg.validate()?;
    let mut obj = SampledObjective::new(problem, cfg, seeds);
    moreau_from_objective(&mut obj, theta, &problem.space, cfg)
}

/// Final diagnostics record of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub moreau_estimate: f64,
    pub lambda: f64,
    pub epsilon_bar: Option<f64>,
    pub gap_measurements: usize,
    pub samples: usize,
    pub probes_per_sample: usize,
    pub prox_iterations: usize,
    pub seeds: SeedBundle,
}
