//! Static problem description: dimensions, physics and geometry.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rician factor and pathloss exponent of one link class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    /// Linear Rician factor κ. `0` is Rayleigh, `inf` is pure line of sight.
    pub rician_factor: f64,
    /// Exponent β of the log-distance law.
    pub pathloss_exponent: f64,
}

impl LinkParams {
    pub fn from_db(rician_db: f64, pathloss_exponent: f64) -> Self {
        Self {
            rician_factor: db_to_linear(rician_db),
            pathloss_exponent,
        }
    }

    /// Weights `(sqrt(κ/(1+κ)), sqrt(1/(1+κ)))` of the LoS and scattered parts.
    pub fn mix(&self) -> (f64, f64) {
        let k = self.rician_factor;
        if k.is_infinite() {
            (1.0, 0.0)
        } else {
            ((k / (1.0 + k)).sqrt(), (1.0 / (1.0 + k)).sqrt())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub carrier_hz: f64,
    /// Linear pathloss gain C₀ at the reference distance.
    pub reference_gain: f64,
    pub reference_distance: f64,
    pub ap_irs: LinkParams,
    pub irs_user: LinkParams,
    pub ap_user: LinkParams,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            carrier_hz: 2.4e9,
            reference_gain: db_to_linear(-30.0),
            reference_distance: 1.0,
            ap_irs: LinkParams::from_db(10.0, 2.2),
            irs_user: LinkParams::from_db(10.0, 2.8),
            ap_user: LinkParams {
                rician_factor: 0.0,
                pathloss_exponent: 3.5,
            },
        }
    }
}

impl ChannelParams {
    pub fn wavelength(&self) -> f64 {
        299_792_458.0 / self.carrier_hz
    }

    /// `C₀ (d/d₀)^{-β}`.
    pub fn pathloss(&self, link: &LinkParams, distance: f64) -> f64 {
        self.reference_gain * (distance / self.reference_distance).powf(-link.pathloss_exponent)
    }
}

/// Node positions in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub ap: [f64; 3],
    pub irs: [f64; 3],
    pub users: Vec<[f64; 3]>,
}

impl Geometry {
    /// AP at the origin, IRS on a wall, receivers spread over a horizontal
    /// disc in front of the IRS on a deterministic sunflower pattern.
    pub fn disc(num_users: usize, center: [f64; 3], radius: f64) -> Self {
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        let users = (0..num_users)
            .map(|k| {
                let r = radius * ((k as f64 + 0.5) / num_users as f64).sqrt();
                let a = golden * k as f64;
                [center[0] + r * a.cos(), center[1] + r * a.sin(), center[2]]
            })
            .collect();
        Self {
            ap: [0.0, 0.0, 10.0],
            irs: [50.0, 0.0, 5.0],
            users,
        }
    }

    pub fn default_for(num_users: usize) -> Self {
        Self::disc(num_users, DEFAULT_USER_CENTER, DEFAULT_USER_RADIUS)
    }
}

pub const DEFAULT_USER_CENTER: [f64; 3] = [50.0, 2.0, 0.0];
pub const DEFAULT_USER_RADIUS: f64 = 3.0;

pub fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub num_antennas: usize,
    pub num_users: usize,
    pub num_irs_elements: usize,
    /// Total transmit power P in watts.
    pub power_budget: f64,
    /// Per-receiver noise variances σ²_k in watts.
    pub noise_variances: Vec<f64>,
    pub sumrate_weights: Vec<f64>,
    pub geometry: Geometry,
    pub channel: ChannelParams,
}

impl NetworkConfig {
    /// Uniform weights, equal noise, default geometry and channel constants.
    pub fn new(
        num_antennas: usize,
        num_users: usize,
        num_irs_elements: usize,
        power_budget: f64,
        noise_variance: f64,
    ) -> Self {
        Self {
            num_antennas,
            num_users,
            num_irs_elements,
            power_budget,
            noise_variances: vec![noise_variance; num_users],
            sumrate_weights: vec![1.0; num_users],
            geometry: Geometry::default_for(num_users),
            channel: ChannelParams::default(),
        }
    }

    /// Number of vectorized effective channel entries, M·K.
    pub fn channel_dim(&self) -> usize {
        self.num_antennas * self.num_users
    }

    /// Scalar links of the cascaded model: S·M + S·K + M·K.
    pub fn cascaded_link_count(&self) -> usize {
        let (m, k, s) = (self.num_antennas, self.num_users, self.num_irs_elements);
        s * m + s * k + m * k
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.num_antennas == 0 || self.num_users == 0 || self.num_irs_elements == 0 {
            return bad("M, K and S must all be at least 1".into());
        }
        if !(self.power_budget.is_finite() && self.power_budget > 0.0) {
            return bad(format!("power budget {} must be positive", self.power_budget));
        }
        let k = self.num_users;
        for (name, v) in [
            ("noise_variances", &self.noise_variances),
            ("sumrate_weights", &self.sumrate_weights),
        ] {
            if v.len() != k {
                return bad(format!("{name} has {} entries for {k} users", v.len()));
            }
            if let Some(x) = v.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
                return bad(format!("{name} entry {x} must be positive"));
            }
        }
        if self.geometry.users.len() != k {
            return bad(format!(
                "geometry lists {} receivers for {k} users",
                self.geometry.users.len()
            ));
        }
        let ch = &self.channel;
        if !(ch.carrier_hz > 0.0 && ch.reference_gain > 0.0 && ch.reference_distance > 0.0) {
            return bad("carrier, reference gain and reference distance must be positive".into());
        }
        for link in [ch.ap_irs, ch.irs_user, ch.ap_user] {
            if link.rician_factor.is_nan() || link.rician_factor < 0.0 {
                return bad(format!("Rician factor {} must be >= 0", link.rician_factor));
            }
            if !link.pathloss_exponent.is_finite() {
                return bad("pathloss exponent must be finite".into());
            }
        }
        let g = &self.geometry;
        const EPS: f64 = 1e-9;
        if distance(&g.ap, &g.irs) < EPS {
            return Err(Error::CoincidentNodes("ap".into(), "irs".into()));
        }
        for (i, u) in g.users.iter().enumerate() {
            if distance(&g.ap, u) < EPS {
                return Err(Error::CoincidentNodes("ap".into(), format!("user{i}")));
            }
            if distance(&g.irs, u) < EPS {
                return Err(Error::CoincidentNodes("irs".into(), format!("user{i}")));
            }
        }
        Ok(())
    }
}
