//! Static SVG charts of aggregated sumrate curves.

use std::path::Path;

use plotters::prelude::*;

use crate::error::{Error, Result};

use super::aggregate::SummaryRow;

fn plot_err<E: std::fmt::Display>(e: E) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

/// One line per labelled series: mean moving-average sumrate against t.
pub fn write_svg(path: &Path, title: &str, series: &[(String, Vec<SummaryRow>)]) -> Result<()> {
    let points = series.iter().flat_map(|(_, rows)| rows.iter());
    let (mut lo, mut hi, mut t_max) = (f64::INFINITY, f64::NEG_INFINITY, 1usize);
    for r in points {
        lo = lo.min(r.mean);
        hi = hi.max(r.mean);
        t_max = t_max.max(r.t);
    }
    if !lo.is_finite() {
        return Err(Error::InvalidConfig("nothing to plot".into()));
    }
    let pad = ((hi - lo) * 0.05).max(1e-3);

    let root = SVGBackend::new(path, (960, 600)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 22))
        .margin(16)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(0f64..t_max as f64, (lo - pad)..(hi + pad))
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .x_desc("iteration t")
        .y_desc("moving-average sumrate (bps/Hz)")
        .draw()
        .map_err(plot_err)?;
    for (i, (label, rows)) in series.iter().enumerate() {
        let color = Palette99::pick(i).to_rgba();
        chart
            .draw_series(LineSeries::new(rows.iter().map(|r| (r.t as f64, r.mean)), color.stroke_width(2)))
            .map_err(plot_err)?
            .label(label.as_str())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], color.stroke_width(2)));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .position(SeriesLabelPosition::LowerRight)
        .draw()
        .map_err(plot_err)?;
    root.present().map_err(plot_err)?;
    Ok(())
}
