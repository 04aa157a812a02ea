//! Cross-replication summaries of moving-average sumrate traces.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

use super::io::{fmt_float, read_trace};

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub t: usize,
    pub mean: f64,
    pub std_err: f64,
}

/// Trailing moving average with window `window`; the first entries average
/// what is available.
pub fn moving_average(xs: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    (0..xs.len())
        .map(|i| {
            let tail = &xs[(i + 1).saturating_sub(window)..=i];
            tail.iter().sum::<f64>() / tail.len() as f64
        })
        .collect()
}

/// Per-iteration mean and standard error across replications of the
/// windowed moving average of each sumrate trace.
pub fn aggregate(traces: &[Vec<f64>], window: usize) -> Result<Vec<SummaryRow>> {
    let first = traces
        .first()
        .ok_or_else(|| Error::InvalidConfig("aggregate needs at least one replication".into()))?;
    if let Some(bad) = traces.iter().find(|t| t.len() != first.len()) {
        return Err(Error::TraceLength(first.len(), bad.len()));
    }
    let smoothed: Vec<Vec<f64>> = traces.iter().map(|t| moving_average(t, window)).collect();
    Ok((0..first.len())
        .map(|i| {
            let column: Vec<f64> = smoothed.iter().map(|s| s[i]).collect();
            SummaryRow {
                t: i,
                mean: crate::stats::mean(&column),
                std_err: if column.len() > 1 { crate::stats::std_err(&column) } else { 0.0 },
            }
        })
        .collect())
}

pub fn aggregate_files<P: AsRef<Path>>(paths: &[P], window: usize) -> Result<Vec<SummaryRow>> {
    let traces = paths
        .iter()
        .map(|p| Ok(read_trace(p.as_ref())?.into_iter().map(|r| r.sumrate_t).collect()))
        .collect::<Result<Vec<Vec<f64>>>>()?;
    aggregate(&traces, window)
}

pub fn write_summary<W: Write>(mut out: W, rows: &[SummaryRow]) -> Result<()> {
    writeln!(out, "t,mean,std_err")?;
    for r in rows {
        writeln!(out, "{},{},{}", r.t, fmt_float(r.mean), fmt_float(r.std_err))?;
    }
    Ok(())
}
