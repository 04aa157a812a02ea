//! Weighted sumrate, per-user SINR and the Wirtinger co-gradient of the
//! sumrate with respect to the effective channel.
//!
//! Derivative convention: for a complex perturbation `dz` of vec(H),
//! `dF = 2 Re(gᴴ dz)`, i.e. `g = ∂F/∂z̄`. The quasi-gradient estimator
//! relies on this; see [`crate::zo::quasi_gradient`].

use std::f64::consts::LN_2;

use nalgebra::{DMatrix, DVectorView};
use num_complex::Complex64;

use crate::channel::EffectiveChannel;
use crate::config::NetworkConfig;
use crate::error::{Error, Result};

/// Transmit precoder W (`M × K`, column k is `w_k`) with its power budget.
#[derive(Debug, Clone, PartialEq)]
pub struct Precoder {
    pub w: DMatrix<Complex64>,
    pub power_budget: f64,
}

impl Precoder {
    pub fn new(w: DMatrix<Complex64>, power_budget: f64) -> Self {
        Self { w, power_budget }
    }

    pub fn zeros(num_antennas: usize, num_users: usize, power_budget: f64) -> Self {
        Self::new(DMatrix::zeros(num_antennas, num_users), power_budget)
    }

    /// ‖W‖_F².
    pub fn power(&self) -> f64 {
        self.w.norm_squared()
    }

    /// ‖W‖_F² ≤ P(1 + 1e-9).
    pub fn is_feasible(&self) -> bool {
        self.power() <= self.power_budget * (1.0 + 1e-9)
    }
}

/// Co-gradient g = ∂F/∂z̄ at z = vec(H), stored as an `M × K` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CoGradient {
    pub g: DMatrix<Complex64>,
}

impl CoGradient {
    pub fn as_vec(&self) -> &[Complex64] {
        self.g.as_slice()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SumrateValue {
    /// bps/Hz.
    pub value: f64,
    pub per_user_sinr: Vec<f64>,
}

fn check_dims(w: &Precoder, h: &EffectiveChannel, config: &NetworkConfig) -> Result<()> {
    let (m, k) = (config.num_antennas, config.num_users);
    if h.h.shape() != (m, k) {
        return Err(Error::DimensionMismatch {
            what: "effective channel",
            expected: m * k,
            got: h.h.len(),
        });
    }
    if w.w.shape() != (m, k) {
        return Err(Error::DimensionMismatch {
            what: "precoder",
            expected: m * k,
            got: w.w.len(),
        });
    }
    Ok(())
}

/// `|h_kᴴ w_j|²` for every j.
fn received_powers(w: &DMatrix<Complex64>, h_k: DVectorView<'_, Complex64>) -> Vec<f64> {
    w.column_iter().map(|wj| h_k.dotc(&wj).norm_sqr()).collect()
}

fn sinr_from_powers(powers: &[f64], k: usize, noise: f64) -> f64 {
    let signal = powers[k];
    // Subnormal signal power is flushed to zero.
    if signal < f64::MIN_POSITIVE {
        return 0.0;
    }
    let interference: f64 = powers.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, p)| p).sum();
    signal / (interference + noise)
}

/// `|h_kᴴ w_k|² / (Σ_{j≠k} |h_kᴴ w_j|² + σ²_k)`.
pub fn sinr(w: &Precoder, h_k: DVectorView<'_, Complex64>, k: usize, noise_variance: f64) -> Result<f64> {
    if h_k.len() != w.w.nrows() {
        return Err(Error::DimensionMismatch {
            what: "user channel",
            expected: w.w.nrows(),
            got: h_k.len(),
        });
    }
    if k >= w.w.ncols() {
        return Err(Error::DimensionMismatch {
            what: "user index",
            expected: w.w.ncols(),
            got: k,
        });
    }
    Ok(sinr_from_powers(&received_powers(&w.w, h_k), k, noise_variance))
}

/// `F = Σ_k α_k log₂(1 + SINR_k)`.
pub fn sumrate(w: &Precoder, h: &EffectiveChannel, config: &NetworkConfig) -> Result<SumrateValue> {
    check_dims(w, h, config)?;
    let mut value = 0.0;
    let mut per_user_sinr = Vec::with_capacity(config.num_users);
    for k in 0..config.num_users {
        let p = received_powers(&w.w, h.user(k));
        let s = sinr_from_powers(&p, k, config.noise_variances[k]);
        value += config.sumrate_weights[k] * s.ln_1p() / LN_2;
        per_user_sinr.push(s);
    }
    Ok(SumrateValue { value, per_user_sinr })
}

/// Wirtinger co-gradient of F with respect to vec(H).
///
/// Each `h_k` enters only user k's rate. Writing `T_k = Σ_j |h_kᴴw_j|² + σ²_k`
/// and `I_k = T_k − |h_kᴴw_k|²`,
///
/// ```text
/// ∂F/∂h̄_k = α_k/ln2 · [ Σ_j w_j (w_jᴴ h_k) / T_k − Σ_{j≠k} w_j (w_jᴴ h_k) / I_k ]
/// ```
pub fn cogradient(w: &Precoder, h: &EffectiveChannel, config: &NetworkConfig) -> Result<CoGradient> {
    check_dims(w, h, config)?;
    let (m, kk) = (config.num_antennas, config.num_users);
    let mut g = DMatrix::zeros(m, kk);
    for k in 0..kk {
        let h_k = h.user(k);
        // c_j = w_jᴴ h_k
        let c: Vec<Complex64> = w.w.column_iter().map(|wj| wj.dotc(&h_k)).collect();
        let p: Vec<f64> = c.iter().map(|z| z.norm_sqr()).collect();
        let noise = config.noise_variances[k];
        let interference: f64 = p.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, x)| x).sum::<f64>() + noise;
        let total = interference + p[k];
        let scale = config.sumrate_weights[k] / LN_2;
        let mut col = g.column_mut(k);
        for (j, wj) in w.w.column_iter().enumerate() {
            let coef = if j == k {
                c[j] / total
            } else {
                c[j] * (1.0 / total - 1.0 / interference)
            };
            col.axpy(coef * scale, &wj, Complex64::new(1.0, 0.0));
        }
    }
    Ok(CoGradient { g })
}
