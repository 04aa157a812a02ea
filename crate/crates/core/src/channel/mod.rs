//! Channel simulation: Rician intermediate links and the IRS-shaped
//! effective channel `h_k = Gᴴ Diag(γ) h_{r,k} + h_{d,k}`.

mod irs;

pub use irs::{irs_reflection, IrsParams, ParamSpace, Parametrization, VaractorModel};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::{distance, NetworkConfig};
use crate::error::{Error, Result};
use crate::rng::omega_stream;

/// One draw ω of all intermediate channels.
#[derive(Debug, Clone, PartialEq)]
pub struct StateOfNature {
    /// AP to IRS, `S × M`.
    pub ap_irs: DMatrix<Complex64>,
    /// IRS to receivers, column k is `h_{r,k}` (`S × K`).
    pub irs_user: DMatrix<Complex64>,
    /// AP to receivers, column k is `h_{d,k}` (`M × K`).
    pub direct: DMatrix<Complex64>,
    pub seed_tag: u64,
}

impl StateOfNature {
    pub fn is_finite(&self) -> bool {
        [&self.ap_irs, &self.irs_user, &self.direct]
            .iter()
            .all(|m| m.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
    }
}

/// Effective channel, column k is `h_k` (`M × K`). Column-major storage
/// makes `as_slice()` equal to vec(H).
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveChannel {
    pub h: DMatrix<Complex64>,
    pub seed_tag: u64,
}

impl EffectiveChannel {
    pub fn new(h: DMatrix<Complex64>) -> Self {
        Self { h, seed_tag: 0 }
    }

    pub fn num_antennas(&self) -> usize {
        self.h.nrows()
    }

    pub fn num_users(&self) -> usize {
        self.h.ncols()
    }

    pub fn user(&self, k: usize) -> nalgebra::DVectorView<'_, Complex64> {
        self.h.column(k)
    }

    /// vec(H) ∈ ℂ^{M·K}.
    pub fn as_vec(&self) -> &[Complex64] {
        self.h.as_slice()
    }
}

/// Array response `exp(j 2π/λ · r_i·u)` for element offsets `r_i`.
fn array_response(offsets: &[[f64; 3]], dir: [f64; 3], wavelength: f64) -> Vec<Complex64> {
    let k = 2.0 * std::f64::consts::PI / wavelength;
    offsets
        .iter()
        .map(|r| Complex64::cis(k * (r[0] * dir[0] + r[1] * dir[1] + r[2] * dir[2])))
        .collect()
}

fn unit(from: &[f64; 3], to: &[f64; 3]) -> [f64; 3] {
    let d = distance(from, to);
    [(to[0] - from[0]) / d, (to[1] - from[1]) / d, (to[2] - from[2]) / d]
}

/// Half-wavelength ULA along the y axis.
fn ula_offsets(n: usize, spacing: f64) -> Vec<[f64; 3]> {
    (0..n).map(|i| [0.0, i as f64 * spacing, 0.0]).collect()
}

/// Half-wavelength UPA in the y–z plane, filled row by row.
fn upa_offsets(n: usize, spacing: f64) -> Vec<[f64; 3]> {
    let cols = (n as f64).sqrt().ceil() as usize;
    (0..n)
        .map(|i| [0.0, (i % cols) as f64 * spacing, (i / cols) as f64 * spacing])
        .collect()
}

/// Sampler of states of nature for a fixed network.
///
/// Line-of-sight components depend only on geometry and are computed once;
/// every draw redraws the scattered components.
#[derive(Debug, Clone)]
pub struct ChannelModel {
    config: NetworkConfig,
    g_los: DMatrix<Complex64>,
    hr_los: DMatrix<Complex64>,
    hd_los: DMatrix<Complex64>,
    /// `(sqrt(PL)·los weight, sqrt(PL)·scatter weight)` per link.
    g_mix: (f64, f64),
    hr_mix: Vec<(f64, f64)>,
    hd_mix: Vec<(f64, f64)>,
}

impl ChannelModel {
    pub fn new(config: NetworkConfig) -> Result<Self> {
        config.validate()?;
        let (m, k, s) = (config.num_antennas, config.num_users, config.num_irs_elements);
        let ch = &config.channel;
        let geo = &config.geometry;
        let lambda = ch.wavelength();
        let ap_el = ula_offsets(m, lambda / 2.0);
        let irs_el = upa_offsets(s, lambda / 2.0);

        let a_ap = array_response(&ap_el, unit(&geo.ap, &geo.irs), lambda);
        let a_irs = array_response(&irs_el, unit(&geo.irs, &geo.ap), lambda);
        let g_los = DMatrix::from_fn(s, m, |i, j| a_irs[i] * a_ap[j]);

        let mut hr_los = DMatrix::zeros(s, k);
        let mut hd_los = DMatrix::zeros(m, k);
        let mut hr_mix = Vec::with_capacity(k);
        let mut hd_mix = Vec::with_capacity(k);
        for (u, pos) in geo.users.iter().enumerate() {
            // Channels enter as h^H, so the propagation rows are conjugated.
            let r = array_response(&irs_el, unit(&geo.irs, pos), lambda);
            let d = array_response(&ap_el, unit(&geo.ap, pos), lambda);
            for i in 0..s {
                hr_los[(i, u)] = r[i].conj();
            }
            for i in 0..m {
                hd_los[(i, u)] = d[i].conj();
            }
            hr_mix.push(scaled_mix(ch.pathloss(&ch.irs_user, distance(&geo.irs, pos)), ch.irs_user.mix()));
            hd_mix.push(scaled_mix(ch.pathloss(&ch.ap_user, distance(&geo.ap, pos)), ch.ap_user.mix()));
        }
        let g_mix = scaled_mix(ch.pathloss(&ch.ap_irs, distance(&geo.ap, &geo.irs)), ch.ap_irs.mix());

        Ok(Self { config, g_los, hr_los, hd_los, g_mix, hr_mix, hd_mix })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    /// Draws one state of nature from `rng`. Entries are consumed in a fixed
    /// order: G column-major, then every `h_{r,k}`, then every `h_{d,k}`.
    pub fn sample_state<R: Rng + ?Sized>(&self, rng: &mut R, seed_tag: u64) -> StateOfNature {
        let mut draw = |los: Complex64, (a, b): (f64, f64)| {
            if b == 0.0 {
                return los * a;
            }
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            los * a + Complex64::new(re, im) * (b * std::f64::consts::FRAC_1_SQRT_2)
        };
        let ap_irs = self.g_los.map(|z| draw(z, self.g_mix));
        let mut irs_user = self.hr_los.clone();
        for (k, mut col) in irs_user.column_iter_mut().enumerate() {
            for z in col.iter_mut() {
                *z = draw(*z, self.hr_mix[k]);
            }
        }
        let mut direct = self.hd_los.clone();
        for (k, mut col) in direct.column_iter_mut().enumerate() {
            for z in col.iter_mut() {
                *z = draw(*z, self.hd_mix[k]);
            }
        }
        StateOfNature { ap_irs, irs_user, direct, seed_tag }
    }

    /// The draw addressed by `(seed, tag)`; bit-identical on every call.
    pub fn sample_tagged(&self, seed: u64, tag: u64) -> StateOfNature {
        self.sample_state(&mut omega_stream(seed, tag), tag)
    }

    /// Per-entry variance of the scattered part of `h_{d,k}`.
    pub fn direct_scatter_variance(&self, k: usize) -> f64 {
        self.hd_mix[k].1.powi(2)
    }
}

fn scaled_mix(pathloss: f64, (los, nlos): (f64, f64)) -> (f64, f64) {
    let a = pathloss.sqrt();
    (a * los, a * nlos)
}

/// `h_k = Gᴴ Diag(γ) h_{r,k} + h_{d,k}` for an explicit reflection vector.
pub fn compose_channel(gamma: &[Complex64], omega: &StateOfNature) -> Result<EffectiveChannel> {
    let s = omega.ap_irs.nrows();
    if gamma.len() != s || omega.irs_user.nrows() != s {
        return Err(Error::DimensionMismatch {
            what: "reflection vector",
            expected: s,
            got: gamma.len(),
        });
    }
    if omega.direct.nrows() != omega.ap_irs.ncols() || omega.direct.ncols() != omega.irs_user.ncols() {
        return Err(Error::DimensionMismatch {
            what: "direct channel",
            expected: omega.ap_irs.ncols(),
            got: omega.direct.nrows(),
        });
    }
    let mut reflected = omega.irs_user.clone();
    for mut col in reflected.column_iter_mut() {
        for (z, g) in col.iter_mut().zip(gamma) {
            *z *= g;
        }
    }
    let h = omega.ap_irs.ad_mul(&reflected) + &omega.direct;
    Ok(EffectiveChannel { h, seed_tag: omega.seed_tag })
}

/// Effective channel H(θ, ω) for feasible IRS parameters.
pub fn effective_channel(params: &IrsParams, omega: &StateOfNature) -> Result<EffectiveChannel> {
    if params.space.num_elements != omega.ap_irs.nrows() {
        return Err(Error::DimensionMismatch {
            what: "IRS elements",
            expected: omega.ap_irs.nrows(),
            got: params.space.num_elements,
        });
    }
    compose_channel(&irs_reflection(params)?, omega)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::LinkParams;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_config() -> NetworkConfig {
        NetworkConfig::new(3, 2, 5, 1.0, 1e-11)
    }

    #[test]
    fn reproducible_per_tag() {
        let model = ChannelModel::new(small_config()).unwrap();
        let a = model.sample_tagged(11, 4);
        let b = model.sample_tagged(11, 4);
        assert_eq!(a, b);
        assert_ne!(a, model.sample_tagged(11, 5));
        assert!(a.is_finite());
        assert_eq!(a.ap_irs.shape(), (5, 3));
        assert_eq!(a.irs_user.shape(), (5, 2));
        assert_eq!(a.direct.shape(), (3, 2));
    }

    #[test]
    fn pure_los_is_deterministic() {
        let mut cfg = small_config();
        let los = |b| LinkParams { rician_factor: f64::INFINITY, pathloss_exponent: b };
        cfg.channel.ap_irs = los(2.2);
        cfg.channel.irs_user = los(2.8);
        cfg.channel.ap_user = los(3.5);
        let model = ChannelModel::new(cfg).unwrap();
        let a = model.sample_tagged(1, 0);
        let b = model.sample_tagged(2, 0);
        assert_eq!(a.ap_irs, b.ap_irs);
        assert_eq!(a.irs_user, b.irs_user);
        assert_eq!(a.direct, b.direct);
    }

    #[test]
    fn zero_irs_links_leave_direct_channel() {
        let model = ChannelModel::new(small_config()).unwrap();
        let mut omega = model.sample_tagged(3, 0);
        omega.irs_user.fill(Complex64::new(0.0, 0.0));
        let space = ParamSpace::ideal_phase(5);
        let params = IrsParams::new(vec![0.3, -1.0, 2.0, 0.0, 5.0], space).unwrap();
        let h = effective_channel(&params, &omega).unwrap();
        assert_eq!(h.h, omega.direct);
    }

    #[test]
    fn single_element_hand_check() {
        // M = 2, S = 1, K = 1, γ = 1: h = conj(G[0,:])ᵀ h_r + h_d.
        let c = Complex64::new;
        let omega = StateOfNature {
            ap_irs: DMatrix::from_row_slice(1, 2, &[c(1.0, 2.0), c(0.0, -1.0)]),
            irs_user: DMatrix::from_row_slice(1, 1, &[c(2.0, 1.0)]),
            direct: DMatrix::from_row_slice(2, 1, &[c(0.5, 0.0), c(0.0, 0.5)]),
            seed_tag: 9,
        };
        let h = compose_channel(&[c(1.0, 0.0)], &omega).unwrap();
        // (1-2j)(2+j) = 4-3j ; (j)(2+j) = -1+2j
        assert!((h.h[(0, 0)] - c(4.5, -3.0)).norm() < 1e-15);
        assert!((h.h[(1, 0)] - c(-1.0, 2.5)).norm() < 1e-15);
        assert_eq!(h.seed_tag, 9);
    }

    #[test]
    fn affine_in_reflection() {
        let model = ChannelModel::new(small_config()).unwrap();
        let omega = model.sample_tagged(5, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut rand_c = || Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        let g1: Vec<_> = (0..5).map(|_| rand_c()).collect();
        let g2: Vec<_> = (0..5).map(|_| rand_c()).collect();
        let sum: Vec<_> = g1.iter().zip(&g2).map(|(a, b)| a + b).collect();
        let zero = vec![Complex64::new(0.0, 0.0); 5];
        let h = |g: &[Complex64]| compose_channel(g, &omega).unwrap().h;
        let lhs = h(&sum) - h(&g2);
        let rhs = h(&g1) - h(&zero);
        assert!((&lhs - &rhs).norm() <= 1e-12 * rhs.norm());
    }

    #[test]
    fn one_coordinate_change_matches_recomputation() {
        let model = ChannelModel::new(small_config()).unwrap();
        let omega = model.sample_tagged(8, 1);
        let space = ParamSpace::ideal_phase(5);
        let t1 = vec![0.1, 0.2, 0.3, 0.4, 0.5];
        let mut t2 = t1.clone();
        t2[3] = -1.2;
        let h1 = effective_channel(&IrsParams::new(t1.clone(), space.clone()).unwrap(), &omega).unwrap();
        let h2 = effective_channel(&IrsParams::new(t2.clone(), space).unwrap(), &omega).unwrap();
        // Only element 3 changes: Δh_k = conj(G[3,:]) (γ₂ − γ₁) h_r[3,k].
        let dg = Complex64::cis(t2[3]) - Complex64::cis(t1[3]);
        for k in 0..2 {
            for m in 0..3 {
                let expect = omega.ap_irs[(3, m)].conj() * dg * omega.irs_user[(3, k)];
                let got = h2.h[(m, k)] - h1.h[(m, k)];
                assert!((got - expect).norm() <= 1e-14 * (1.0 + expect.norm()) + 1e-25);
            }
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let model = ChannelModel::new(small_config()).unwrap();
        let omega = model.sample_tagged(0, 0);
        let gamma = vec![Complex64::new(1.0, 0.0); 4];
        assert!(matches!(compose_channel(&gamma, &omega), Err(Error::DimensionMismatch { .. })));
    }
}
