//! Two-point zeroth-order quasi-gradient through the compound channel.
//!
//! With `δ = (H(θ+μU) − H(θ−μU)) / (2μ)` and the co-gradient `g` at
//! `H(θ)`, the sample gradient is
//!
//! ```text
//! D = 2 (Re(δ)ᵀ Re(g) + Im(δ)ᵀ Im(g)) · U
//! ```
//!
//! i.e. the finite-difference Jacobian `δ Uᵀ` contracted with the real and
//! imaginary parts of the co-gradient. The leading 2 is the factor of the
//! `dF = 2 Re(gᴴ dz)` convention and is applied only here.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::channel::{compose_channel, EffectiveChannel, ParamSpace, StateOfNature};
use crate::error::{Error, Result};
use crate::sumrate::CoGradient;

/// Smoothing configuration. The default smoothing follows the
/// `μ = c_μ / √(M_U T)` scaling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub smoothing: f64,
    /// Probe directions averaged per outer step (1 = single probe).
    pub probes_per_step: usize,
}

impl ProbeConfig {
    pub fn new(smoothing: f64) -> Self {
        Self { smoothing, probes_per_step: 1 }
    }

    pub fn scaled(c_mu: f64, channel_dim: usize, horizon: usize) -> Self {
        Self::new(smoothing_for(c_mu, channel_dim, horizon))
    }
}

/// `c_μ / √(M_U · T)`.
pub fn smoothing_for(c_mu: f64, channel_dim: usize, horizon: usize) -> f64 {
    c_mu / ((channel_dim * horizon.max(1)) as f64).sqrt()
}

/// Standard normal direction U ∈ ℝ^S.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeDraw {
    pub u: Vec<f64>,
}

impl ProbeDraw {
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Self {
        Self {
            u: (0..dim).map(|_| rng.sample(StandardNormal)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuasiGradient {
    pub d: Vec<f64>,
}

impl QuasiGradient {
    pub fn is_finite(&self) -> bool {
        self.d.iter().all(|x| x.is_finite())
    }
}

/// Probe pair plus the number of clamp events while mapping θ ± μU.
#[derive(Debug, Clone)]
pub struct ProbePair {
    pub plus: EffectiveChannel,
    pub minus: EffectiveChannel,
    pub clamp_events: usize,
}

/// `H(θ + μU, ω)` and `H(θ − μU, ω)` on the same state of nature. Probes
/// may leave Θ; they are evaluated without projection.
pub fn channel_probe_pair(
    space: &ParamSpace,
    theta: &[f64],
    omega: &StateOfNature,
    u: &ProbeDraw,
    mu: f64,
) -> Result<ProbePair> {
    if theta.len() != space.dim() || u.u.len() != space.dim() {
        return Err(Error::DimensionMismatch {
            what: "probe direction",
            expected: space.dim(),
            got: u.u.len(),
        });
    }
    let shifted = |sign: f64| -> Vec<f64> { theta.iter().zip(&u.u).map(|(t, d)| t + sign * mu * d).collect() };
    let (g_plus, c_plus) = space.probe_reflection(&shifted(1.0));
    let (g_minus, c_minus) = space.probe_reflection(&shifted(-1.0));
    Ok(ProbePair {
        plus: compose_channel(&g_plus, omega)?,
        minus: compose_channel(&g_minus, omega)?,
        clamp_events: c_plus + c_minus,
    })
}

/// The scalar `2 Re(gᴴ δ)` with `δ = (plus − minus)/(2μ)`.
pub fn directional_derivative(plus: &[num_complex::Complex64], minus: &[num_complex::Complex64], mu: f64, g: &[num_complex::Complex64]) -> f64 {
    let inv = 1.0 / (2.0 * mu);
    plus.iter()
        .zip(minus)
        .zip(g)
        .map(|((p, m), g)| {
            let d = (p - m) * inv;
            d.re * g.re + d.im * g.im
        })
        .sum::<f64>()
        * 2.0
}

/// Sample quasi-gradient D_μ.
pub fn quasi_gradient(
    probe_plus: &EffectiveChannel,
    probe_minus: &EffectiveChannel,
    u: &ProbeDraw,
    mu: f64,
    g: &CoGradient,
) -> Result<QuasiGradient> {
    if !(mu > 0.0) {
        return Err(Error::InvalidConfig(format!("smoothing {mu} must be positive")));
    }
    let n = g.g.len();
    for (what, got) in [("probe", probe_plus.h.len()), ("probe", probe_minus.h.len())] {
        if got != n {
            return Err(Error::DimensionMismatch { what, expected: n, got });
        }
    }
    if probe_plus.seed_tag != probe_minus.seed_tag {
        return Err(Error::InvalidConfig(format!(
            "probes come from different states of nature ({} vs {})",
            probe_plus.seed_tag, probe_minus.seed_tag
        )));
    }
    let s = directional_derivative(probe_plus.as_vec(), probe_minus.as_vec(), mu, g.as_vec());
    Ok(QuasiGradient {
        d: u.u.iter().map(|x| s * x).collect(),
    })
}
