//! Experiment configuration files.
//!
//! A config file is a TOML document with the sections `network`, `geometry`,
//! `channel`, `irs`, `optimizer` and `experiment`. Every key is optional: the
//! file is merged over the defaults of the selected scale and the result must
//! deserialize with no leftover keys.
//!
//! Powers and variances take either a bare number (watts) or a string with a
//! unit (`"3 dBm"`, `"-80 dBm"`, `"0.1 W"`, `"20 mW"`, `"-3 dBW"`). Rician
//! factors and gains take a bare linear number or a `"10 dB"` string.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::channel::{Parametrization, VaractorModel};
use crate::config::{db_to_linear, ChannelParams, Geometry, LinkParams, NetworkConfig};
use crate::error::{Error, Result};
use crate::izosga::{IzosgaConfig, ReturnRule, WmmseSchedule, SCHEDULE_A, SCHEDULE_B};
use crate::wmmse::{InitStrategy, OracleConfig};
use crate::zo::smoothing_for;

/// Problem size tuple `(M, K, S, T, period)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scale {
    #[default]
    Desk,
    Paper,
}

impl Scale {
    pub fn dims(self) -> (usize, usize, usize, usize, usize) {
        match self {
            Scale::Desk => (4, 4, 64, 5000, 1600),
            Scale::Paper => (6, 32, 1000, 32000, 8000),
        }
    }

    pub fn gap_cadence(self) -> usize {
        match self {
            Scale::Desk => 50,
            Scale::Paper => 500,
        }
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scale::Desk => "desk",
            Scale::Paper => "paper",
        })
    }
}

const POWER_UNITS: [&str; 6] = ["dBm", "dBW", "mW", "uW", "µW", "W"];

/// Parses `"<number> <unit>"` into watts.
pub fn parse_power(text: &str) -> Result<f64> {
    let (value, unit) = split_unit(text, &POWER_UNITS)?;
    Ok(match unit {
        "mW" => value * 1e-3,
        "uW" | "µW" => value * 1e-6,
        "dBm" => db_to_linear(value - 30.0),
        "dBW" => db_to_linear(value),
        _ => value,
    })
}

/// Parses a linear ratio or a `"<number> dB"` string.
pub fn parse_ratio(text: &str) -> Result<f64> {
    let (value, unit) = split_unit(text, &["dB"])?;
    Ok(if unit == "dB" { db_to_linear(value) } else { value })
}

fn split_unit<'u>(text: &str, units: &[&'u str]) -> Result<(f64, &'u str)> {
    let t = text.trim();
    let (num, unit) = units
        .iter()
        .find_map(|u| t.strip_suffix(u).map(|n| (n, *u)))
        .unwrap_or((t, ""));
    let value = num
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("cannot read a quantity from `{text}`")))?;
    Ok((value, unit))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum NumberOrText {
    Number(f64),
    Text(String),
}

/// A power in watts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Watts(pub f64);

impl Serialize for Watts {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Watts {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match NumberOrText::deserialize(d)? {
            NumberOrText::Number(x) => Ok(Watts(x)),
            NumberOrText::Text(t) => parse_power(&t).map(Watts).map_err(serde::de::Error::custom),
        }
    }
}

/// A dimensionless linear ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ratio(pub f64);

impl Serialize for Ratio {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Ratio {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match NumberOrText::deserialize(d)? {
            NumberOrText::Number(x) => Ok(Ratio(x)),
            NumberOrText::Text(t) => parse_ratio(&t).map(Ratio).map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    pub antennas: usize,
    pub users: usize,
    pub irs_elements: usize,
    pub power_budget: Watts,
    /// Shared σ² unless `noise_variances` lists one value per user.
    pub noise_variance: Watts,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_variances: Option<Vec<Watts>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub ap: [f64; 3],
    pub irs: [f64; 3],
    /// Receivers are spread over this disc unless `users` is given.
    pub user_center: [f64; 3],
    pub user_radius: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub users: Option<Vec<[f64; 3]>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSection {
    pub rician_factor: Ratio,
    pub pathloss_exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub carrier_frequency: f64,
    pub reference_gain: Ratio,
    pub reference_distance: f64,
    pub ap_irs: LinkSection,
    pub irs_user: LinkSection,
    pub ap_user: LinkSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IrsKind {
    IdealPhase,
    PhaseAmplitude,
    Varactor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IrsSection {
    pub kind: IrsKind,
    pub varactor: VaractorModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleKind {
    Constant,
    A,
    B,
    /// `schedule_budgets` repeated per period, holding the last entry.
    Piecewise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    pub step_size: f64,
    /// Explicit μ; when absent μ = c_mu / √(M·K·T).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothing: Option<f64>,
    pub c_mu: f64,
    pub horizon: usize,
    pub wmmse_budget: usize,
    pub schedule: ScheduleKind,
    pub schedule_period: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule_budgets: Option<Vec<usize>>,
    pub return_rule: ReturnRule,
    pub step_decay: bool,
    pub probes_per_step: usize,
    /// 0 disables gap measurement.
    pub gap_cadence: usize,
    pub reference_budget: usize,
    pub ma_window: usize,
    pub warm_start: bool,
    pub objective_tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PresetName {
    BudgetSweep,
    BudgetSchedule,
    VaractorSweep,
    BaselineRandomPhase,
    Custom,
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PresetName::BudgetSweep => "budget-sweep",
            PresetName::BudgetSchedule => "budget-schedule",
            PresetName::VaractorSweep => "varactor-sweep",
            PresetName::BaselineRandomPhase => "baseline-random-phase",
            PresetName::Custom => "custom",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub preset: PresetName,
    pub scale: Scale,
    pub reps: usize,
    pub seed: u64,
    /// Oracle budget of the fixed-θ baseline arms.
    pub baseline_budget: usize,
    /// Budgets of the sweep presets.
    pub budgets: Vec<usize>,
    /// Window of the moving average used by `aggregate` and the plots.
    pub aggregate_window: usize,
}

/// Fully resolved experiment settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub network: NetworkSection,
    pub geometry: GeometrySection,
    pub channel: ChannelSection,
    pub irs: IrsSection,
    pub optimizer: OptimizerSection,
    pub experiment: ExperimentSection,
}

pub const DEFAULT_POWER_DBM: f64 = 3.0;
pub const DEFAULT_NOISE_DBM: f64 = -80.0;
pub const DEFAULT_STEP_SIZE: f64 = 0.05;
pub const SWEEP_BUDGETS: [usize; 7] = [1, 2, 3, 5, 10, 20, 50];

impl Settings {
    pub fn for_scale(scale: Scale) -> Self {
        let (m, k, s, t, period) = scale.dims();
        let ch = ChannelParams::default();
        let link = |l: LinkParams| LinkSection {
            rician_factor: Ratio(l.rician_factor),
            pathloss_exponent: l.pathloss_exponent,
        };
        let g = Geometry::default_for(k);
        Self {
            network: NetworkSection {
                antennas: m,
                users: k,
                irs_elements: s,
                power_budget: Watts(parse_power(&format!("{DEFAULT_POWER_DBM} dBm")).unwrap()),
                noise_variance: Watts(parse_power(&format!("{DEFAULT_NOISE_DBM} dBm")).unwrap()),
                noise_variances: None,
                weights: None,
            },
            geometry: GeometrySection {
                ap: g.ap,
                irs: g.irs,
                user_center: crate::config::DEFAULT_USER_CENTER,
                user_radius: crate::config::DEFAULT_USER_RADIUS,
                users: None,
            },
            channel: ChannelSection {
                carrier_frequency: ch.carrier_hz,
                reference_gain: Ratio(ch.reference_gain),
                reference_distance: ch.reference_distance,
                ap_irs: link(ch.ap_irs),
                irs_user: link(ch.irs_user),
                ap_user: link(ch.ap_user),
            },
            irs: IrsSection {
                kind: IrsKind::IdealPhase,
                varactor: VaractorModel::default(),
            },
            optimizer: OptimizerSection {
                step_size: DEFAULT_STEP_SIZE,
                smoothing: None,
                c_mu: 1.0,
                horizon: t,
                wmmse_budget: 10,
                schedule: ScheduleKind::Constant,
                schedule_period: period,
                schedule_budgets: None,
                return_rule: ReturnRule::Final,
                step_decay: false,
                probes_per_step: 1,
                gap_cadence: scale.gap_cadence(),
                reference_budget: 200,
                ma_window: 200,
                warm_start: false,
                objective_tolerance: 0.0,
            },
            experiment: ExperimentSection {
                preset: PresetName::Custom,
                scale,
                reps: 20,
                seed: 1,
                baseline_budget: 50,
                budgets: SWEEP_BUDGETS.to_vec(),
                aggregate_window: 200,
            },
        }
    }

    /// Defaults of the scale named in `overrides` (or `scale` when given),
    /// with `overrides` merged on top.
    pub fn resolve(overrides: &toml::Table, scale: Option<Scale>) -> Result<Self> {
        let file_scale = overrides
            .get("experiment")
            .and_then(|e| e.get("scale"))
            .map(|v| v.clone().try_into::<Scale>())
            .transpose()
            .map_err(|e| Error::InvalidConfig(format!("experiment.scale: {e}")))?;
        let scale = scale.or(file_scale).unwrap_or_default();
        let mut table = toml::Table::try_from(Self::for_scale(scale))
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        merge(&mut table, overrides);
        if let Some(e) = table.get_mut("experiment").and_then(|e| e.as_table_mut()) {
            e.insert("scale".into(), toml::Value::String(scale.to_string()));
        }
        let settings: Settings = toml::Value::Table(table)
            .try_into()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        settings.validate()?;
        Ok(settings)
    }

    pub fn from_toml_str(text: &str, scale: Option<Scale>) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e| Error::Parse(format!("{e}")))?;
        Self::resolve(&table, scale)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn network_config(&self) -> NetworkConfig {
        let n = &self.network;
        let k = n.users;
        let noise = match &n.noise_variances {
            Some(v) => v.iter().map(|w| w.0).collect(),
            None => vec![n.noise_variance.0; k],
        };
        let geo = &self.geometry;
        let mut geometry = Geometry::disc(k, geo.user_center, geo.user_radius);
        geometry.ap = geo.ap;
        geometry.irs = geo.irs;
        if let Some(users) = &geo.users {
            geometry.users = users.clone();
        }
        let ch = &self.channel;
        let link = |l: &LinkSection| LinkParams {
            rician_factor: l.rician_factor.0,
            pathloss_exponent: l.pathloss_exponent,
        };
        NetworkConfig {
            num_antennas: n.antennas,
            num_users: k,
            num_irs_elements: n.irs_elements,
            power_budget: n.power_budget.0,
            noise_variances: noise,
            sumrate_weights: n.weights.clone().unwrap_or_else(|| vec![1.0; k]),
            geometry,
            channel: ChannelParams {
                carrier_hz: ch.carrier_frequency,
                reference_gain: ch.reference_gain.0,
                reference_distance: ch.reference_distance,
                ap_irs: link(&ch.ap_irs),
                irs_user: link(&ch.irs_user),
                ap_user: link(&ch.ap_user),
            },
        }
    }

    pub fn parametrization(&self) -> Parametrization {
        match self.irs.kind {
            IrsKind::IdealPhase => Parametrization::IdealPhase,
            IrsKind::PhaseAmplitude => Parametrization::PhaseAmplitude,
            IrsKind::Varactor => Parametrization::Varactor(self.irs.varactor),
        }
    }

    pub fn smoothing(&self) -> f64 {
        let o = &self.optimizer;
        o.smoothing
            .unwrap_or_else(|| smoothing_for(o.c_mu, self.network.antennas * self.network.users, o.horizon))
    }

    /// The schedule named in the optimizer section.
    pub fn schedule(&self) -> WmmseSchedule {
        let o = &self.optimizer;
        let period = o.schedule_period;
        match o.schedule {
            ScheduleKind::Constant => WmmseSchedule::constant(o.wmmse_budget),
            ScheduleKind::A => WmmseSchedule::Piecewise { period, budgets: SCHEDULE_A.to_vec() },
            ScheduleKind::B => WmmseSchedule::Piecewise { period, budgets: SCHEDULE_B.to_vec() },
            ScheduleKind::Piecewise => WmmseSchedule::Piecewise {
                period,
                budgets: o.schedule_budgets.clone().unwrap_or_default(),
            },
        }
    }

    pub fn optimizer_config(&self, schedule: WmmseSchedule) -> IzosgaConfig {
        let o = &self.optimizer;
        IzosgaConfig {
            return_rule: o.return_rule,
            step_decay: o.step_decay,
            probes_per_step: o.probes_per_step,
            gap_cadence: o.gap_cadence,
            reference_budget: o.reference_budget,
            ma_window: o.ma_window,
            keep_thetas: false,
            ..IzosgaConfig::new(o.step_size, self.smoothing(), o.horizon, schedule)
        }
    }

    pub fn oracle_config(&self) -> OracleConfig {
        let o = &self.optimizer;
        OracleConfig {
            max_iterations: o.wmmse_budget,
            objective_tolerance: o.objective_tolerance,
            init: if o.warm_start { InitStrategy::WarmStart } else { InitStrategy::Mrt },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = &self.network;
        if let Some(v) = &n.noise_variances {
            if v.len() != n.users {
                return Err(Error::InvalidConfig(format!(
                    "network.noise_variances has {} entries for {} users",
                    v.len(),
                    n.users
                )));
            }
        }
        if !(self.geometry.user_radius >= 0.0) {
            return Err(Error::InvalidConfig("geometry.user_radius must be >= 0".into()));
        }
        let e = &self.experiment;
        if e.reps == 0 {
            return Err(Error::InvalidConfig("experiment.reps must be at least 1".into()));
        }
        if e.baseline_budget == 0 || e.budgets.is_empty() || e.budgets.contains(&0) {
            return Err(Error::InvalidConfig("experiment budgets must be non-empty and >= 1".into()));
        }
        if e.aggregate_window == 0 {
            return Err(Error::InvalidConfig("experiment.aggregate_window must be >= 1".into()));
        }
        self.network_config().validate()?;
        if let Parametrization::Varactor(v) = self.parametrization() {
            v.validate()?;
        }
        self.optimizer_config(self.schedule()).validate()?;
        self.oracle_config().validate()
    }
}

/// Recursive merge of `over` into `base`; tables merge, everything else
/// replaces.
pub fn merge(base: &mut toml::Table, over: &toml::Table) {
    for (k, v) in over {
        match (base.get_mut(k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            _ => {
                base.insert(k.clone(), v.clone());
            }
        }
    }
}
