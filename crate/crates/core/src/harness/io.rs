//! Run artifacts: per-replication CSV traces, θ files and the manifest.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::izosga::IterateRecord;
use crate::rng::SeedBundle;

use super::settings::{PresetName, Scale, Settings};

pub const CSV_HEADER: [&str; 7] = [
    "t",
    "sumrate",
    "sumrate_ma",
    "wmmse_iters",
    "gap_estimate",
    "clamp_events",
    "theta_norm",
];

/// 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse(format!("{other:?}")),
    }
}

pub fn write_trace<W: Write>(out: W, trace: &[IterateRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in trace {
        w.write_record([
            r.t.to_string(),
            fmt_float(r.sumrate_t),
            fmt_float(r.sumrate_ma),
            r.wmmse_iters_t.to_string(),
            r.gap_estimate_t.map(fmt_float).unwrap_or_default(),
            r.clamp_events_t.to_string(),
            fmt_float(r.theta_norm),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_file(path: &Path, trace: &[IterateRecord]) -> Result<()> {
    write_trace(fs::File::create(path)?, trace)
}

/// One CSV row read back. `theta_t` is not stored in the CSV.
pub fn read_trace(path: &Path) -> Result<Vec<IterateRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_owned).collect();
    if header != CSV_HEADER {
        return Err(Error::Parse(format!("{}: unexpected header {header:?}", path.display())));
    }
    let num = |s: &str| -> Result<f64> {
        s.parse().map_err(|_| Error::Parse(format!("{}: bad number `{s}`", path.display())))
    };
    let int = |s: &str| -> Result<usize> {
        s.parse().map_err(|_| Error::Parse(format!("{}: bad integer `{s}`", path.display())))
    };
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        out.push(IterateRecord {
            t: int(&rec[0])?,
            theta_t: None,
            sumrate_t: num(&rec[1])?,
            sumrate_ma: num(&rec[2])?,
            wmmse_iters_t: int(&rec[3])?,
            gap_estimate_t: if rec[4].is_empty() { None } else { Some(num(&rec[4])?) },
            clamp_events_t: int(&rec[5])?,
            theta_norm: num(&rec[6])?,
        });
    }
    Ok(out)
}

/// θ as one value per line.
pub fn write_theta(path: &Path, theta: &[f64]) -> Result<()> {
    let mut text = String::with_capacity(theta.len() * 24);
    for x in theta {
        text.push_str(&fmt_float(*x));
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

pub fn read_theta(path: &Path) -> Result<Vec<f64>> {
    fs::read_to_string(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| l.parse().map_err(|_| Error::Parse(format!("{}: bad value `{l}`", path.display()))))
        .collect()
}

/// Seeds are written as hex strings: TOML integers stop at i64.
mod hex_u64 {
    use super::*;

    pub fn serialize<S: Serializer>(x: &u64, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{x:#018x}"))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<u64, D::Error> {
        let s = String::deserialize(d)?;
        let digits = s.strip_prefix("0x").unwrap_or(&s);
        u64::from_str_radix(digits, 16).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub rep: usize,
    #[serde(with = "hex_u64")]
    pub omega: u64,
    #[serde(with = "hex_u64")]
    pub probe: u64,
    #[serde(with = "hex_u64")]
    pub select: u64,
    #[serde(with = "hex_u64")]
    pub init: u64,
}

impl SeedRecord {
    pub fn new(rep: usize, s: &SeedBundle) -> Self {
        Self { rep, omega: s.omega, probe: s.probe, select: s.select, init: s.init }
    }

    pub fn bundle(&self) -> SeedBundle {
        SeedBundle { omega: self.omega, probe: self.probe, select: self.select, init: self.init }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmRecord {
    pub label: String,
    pub description: String,
    /// Replication CSVs relative to the output directory, in rep order.
    pub traces: Vec<String>,
    pub thetas: Vec<String>,
}

/// Everything needed to reproduce a run directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact: String,
    pub version: String,
    pub created: String,
    pub preset: PresetName,
    pub scale: Scale,
    pub reps: usize,
    #[serde(with = "hex_u64")]
    pub master_seed: u64,
    pub aggregate_window: usize,
    pub arms: Vec<ArmRecord>,
    /// Shared by every arm, so arms see common random numbers.
    pub seeds: Vec<SeedRecord>,
    pub config: Settings,
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        fs::write(path, text)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let m: Self = toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        m.config.validate()?;
        if m.seeds.len() != m.reps {
            return Err(Error::Parse(format!("manifest lists {} seed bundles for {} reps", m.seeds.len(), m.reps)));
        }
        Ok(m)
    }
}

pub fn timestamp() -> String {
    time::OffsetDateTime::now_utc()
        .format(&time::format_description::well_known::Rfc3339)
        .unwrap_or_default()
}
