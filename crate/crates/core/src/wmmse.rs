//! WMMSE precoding as an inexact oracle for the short-term problem.
//!
//! One iteration is a full sweep over the three blocks: MMSE receive scalars
//! `u_k`, MSE weights `λ_k = 1/e_k`, and the precoder, which solves a
//! regularized least-squares problem whose power multiplier is found by
//! bisection.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::EffectiveChannel;
use crate::config::NetworkConfig;
use crate::error::{Error, Result};
use crate::sumrate::{sumrate, Precoder};
use crate::testing::random_precoder;

const BISECTION_STEPS: usize = 60;
const MAX_DOUBLINGS: usize = 2048;
pub const DEFAULT_RESTARTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitStrategy {
    /// Per-user MRT directions with equal power.
    Mrt,
    /// Start from the precoder passed as `warm_start`, MRT when absent.
    WarmStart,
    /// Random full-power precoder from the given seed.
    Random { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub max_iterations: usize,
    /// Stop when the relative sumrate improvement of a sweep falls below
    /// this value; `0` disables early stopping.
    pub objective_tolerance: f64,
    pub init: InitStrategy,
}

impl OracleConfig {
    pub fn with_budget(max_iterations: usize) -> Self {
        Self {
            max_iterations,
            objective_tolerance: 0.0,
            init: InitStrategy::Mrt,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("WMMSE budget must be at least 1".into()));
        }
        if !(self.objective_tolerance >= 0.0) {
            return Err(Error::InvalidConfig("objective tolerance must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub precoder: Precoder,
    pub achieved_sumrate: f64,
    pub iterations_used: usize,
    /// Sumrate of the initial precoder followed by one entry per sweep.
    pub sumrate_trace: Vec<f64>,
    pub suboptimality_gap: Option<f64>,
}

/// MRT directions `√(P/K) h_k/‖h_k‖`; users with a zero channel get nothing.
pub fn mrt_precoder(h: &EffectiveChannel, power: f64) -> Precoder {
    let k = h.num_users();
    let per_user = (power / k as f64).sqrt();
    let mut w = h.h.clone();
    for mut col in w.column_iter_mut() {
        let n = col.norm();
        if n > 0.0 {
            col *= Complex64::from(per_user / n);
        } else {
            col.fill(Complex64::new(0.0, 0.0));
        }
    }
    Precoder::new(w, power)
}

/// `(A + νI)^{-1} B` with the smallest ν ≥ 0 for which ‖W‖_F² ≤ P.
fn power_constrained_solve(a: DMatrix<Complex64>, b: &DMatrix<Complex64>, power: f64) -> Result<DMatrix<Complex64>> {
    if b.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
        return Ok(DMatrix::zeros(b.nrows(), b.ncols()));
    }
    let eig = SymmetricEigen::new(a);
    let evals: Vec<f64> = eig.eigenvalues.iter().map(|&e| e.max(0.0)).collect();
    let bt = eig.eigenvectors.adjoint() * b;
    // Squared row norms of Qᴴ B.
    let rows: Vec<f64> = bt.row_iter().map(|r| r.norm_squared()).collect();
    let power_at = |nu: f64| -> f64 {
        rows.iter()
            .zip(&evals)
            .map(|(&r, &e)| {
                if r == 0.0 {
                    0.0
                } else {
                    r / ((e + nu) * (e + nu))
                }
            })
            .sum()
    };

    let nu = if power_at(0.0) <= power {
        0.0
    } else {
        let b_norm = rows.iter().sum::<f64>().sqrt();
        if !b_norm.is_finite() {
            return Err(Error::MultiplierBracket { upper: f64::NAN });
        }
        let mut hi = (b_norm / power.sqrt()) * 1e-3;
        let mut doublings = 0;
        while !(power_at(hi) <= power) {
            hi *= 2.0;
            doublings += 1;
            if doublings > MAX_DOUBLINGS || !hi.is_finite() {
                return Err(Error::MultiplierBracket { upper: hi });
            }
        }
        let mut lo = 0.0;
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if power_at(mid) > power {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    };

    let mut scaled = bt;
    for (i, mut row) in scaled.row_iter_mut().enumerate() {
        let d = evals[i] + nu;
        if d > 0.0 {
            row /= Complex64::from(d);
        } else {
            row.fill(Complex64::new(0.0, 0.0));
        }
    }
    let mut w = eig.eigenvectors * scaled;
    let p = w.norm_squared();
    if p > power {
        w *= Complex64::from((power / p).sqrt());
    }
    Ok(w)
}

/// One (u, λ, W) sweep.
pub fn wmmse_step(w: &Precoder, h: &EffectiveChannel, config: &NetworkConfig) -> Result<Precoder> {
    let (m, kk) = (config.num_antennas, config.num_users);
    let mut a = DMatrix::<Complex64>::zeros(m, m);
    let mut b = DMatrix::<Complex64>::zeros(m, kk);
    for k in 0..kk {
        let h_k = h.user(k);
        let mut total = config.noise_variances[k];
        let mut desired = Complex64::new(0.0, 0.0);
        for (j, wj) in w.w.column_iter().enumerate() {
            let c = h_k.dotc(&wj);
            total += c.norm_sqr();
            if j == k {
                desired = c;
            }
        }
        let u = desired / total;
        let interference = total - desired.norm_sqr();
        // λ_k = 1/e_k = T_k / I_k; I_k ≥ σ²_k > 0.
        let weight = config.sumrate_weights[k] * total / interference.max(config.noise_variances[k]);
        let scale = weight * u.norm_sqr();
        a.ger(Complex64::from(scale), &h_k, &h_k.conjugate(), Complex64::new(1.0, 0.0));
        b.column_mut(k).axpy(u * weight, &h_k, Complex64::new(0.0, 0.0));
    }
    let w_new = power_constrained_solve(a, &b, w.power_budget)?;
    if w_new.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("WMMSE precoder update"));
    }
    Ok(Precoder::new(w_new, w.power_budget))
}

fn initial_precoder(
    h: &EffectiveChannel,
    config: &NetworkConfig,
    oracle_cfg: &OracleConfig,
    warm_start: Option<&Precoder>,
) -> Precoder {
    if let Some(ws) = warm_start {
        return ws.clone();
    }
    match oracle_cfg.init {
        InitStrategy::Mrt | InitStrategy::WarmStart => mrt_precoder(h, config.power_budget),
        InitStrategy::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            random_precoder(&mut rng, config.num_antennas, config.num_users, config.power_budget)
        }
    }
}

/// Runs WMMSE for at most `oracle_cfg.max_iterations` sweeps.
pub fn wmmse_solve(
    h: &EffectiveChannel,
    config: &NetworkConfig,
    oracle_cfg: &OracleConfig,
    warm_start: Option<&Precoder>,
) -> Result<OracleReport> {
    oracle_cfg.validate()?;
    if h.h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("effective channel"));
    }
    let mut w = initial_precoder(h, config, oracle_cfg, warm_start);
    let mut trace = Vec::with_capacity(oracle_cfg.max_iterations + 1);
    trace.push(sumrate(&w, h, config)?.value);
    let mut iterations = 0;
    while iterations < oracle_cfg.max_iterations {
        w = wmmse_step(&w, h, config)?;
        iterations += 1;
        let f = sumrate(&w, h, config)?.value;
        let prev = *trace.last().unwrap();
        trace.push(f);
        if oracle_cfg.objective_tolerance > 0.0
            && (f - prev) <= oracle_cfg.objective_tolerance * prev.abs().max(f64::MIN_POSITIVE)
        {
            break;
        }
    }
    Ok(OracleReport {
        precoder: w,
        achieved_sumrate: *trace.last().unwrap(),
        iterations_used: iterations,
        sumrate_trace: trace,
        suboptimality_gap: None,
    })
}

/// Settings of the high-budget reference solve behind [`measure_gap`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapOptions {
    pub reference_budget: usize,
    /// Random restarts on top of the MRT-initialized solve.
    pub restarts: usize,
    pub seed: u64,
}

impl GapOptions {
    pub fn new(reference_budget: usize) -> Self {
        Self {
            reference_budget,
            restarts: DEFAULT_RESTARTS,
            seed: 0,
        }
    }
}

/// Best precoder over an MRT-initialized solve and `restarts` random ones.
pub fn reference_solve(h: &EffectiveChannel, config: &NetworkConfig, opts: &GapOptions) -> Result<(Precoder, f64)> {
    let mut cfg = OracleConfig::with_budget(opts.reference_budget);
    let mut best = wmmse_solve(h, config, &cfg, None)?;
    for r in 0..opts.restarts {
        cfg.init = InitStrategy::Random {
            seed: crate::rng::mix64(opts.seed ^ (r as u64).wrapping_mul(0x9E37_79B9)),
        };
        let rep = wmmse_solve(h, config, &cfg, None)?;
        if rep.achieved_sumrate > best.achieved_sumrate {
            best = rep;
        }
    }
    Ok((best.precoder, best.achieved_sumrate))
}

/// `max(0, F_ref − F(candidate))`, a surrogate for the objective gap ε̃.
pub fn measure_gap_with(
    h: &EffectiveChannel,
    config: &NetworkConfig,
    candidate: &Precoder,
    opts: &GapOptions,
) -> Result<f64> {
    let (_, f_ref) = reference_solve(h, config, opts)?;
    let f = sumrate(candidate, h, config)?.value;
    Ok((f_ref - f).max(0.0))
}

pub fn measure_gap(
    h: &EffectiveChannel,
    config: &NetworkConfig,
    candidate: &Precoder,
    reference_budget: usize,
) -> Result<f64> {
    measure_gap_with(h, config, candidate, &GapOptions::new(reference_budget))
}
