//! SVG figures of a run and of a parameter comparison.

use std::ops::Range;
use std::path::Path;

use plotters::prelude::*;

use crate::error::{Error, Result};
use crate::ref_path::RefPath;

use super::metrics::ComparisonTable;
use super::run::{Trace, TraceRow};

const SIZE: (u32, u32) = (900, 600);
const PALETTE: [RGBColor; 6] = [BLUE, RED, GREEN, MAGENTA, CYAN, BLACK];

fn plot_err(e: impl std::fmt::Display) -> Error {
    Error::Plot(e.to_string())
}

fn span(values: impl Iterator<Item = f64>) -> Range<f64> {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    if !lo.is_finite() {
        return -1.0..1.0;
    }
    let pad = ((hi - lo) * 0.05).max(1e-6);
    lo - pad..hi + pad
}

/// Time series of several trace columns in one chart.
fn series_chart(
    file: &Path,
    title: &str,
    rows: &[TraceRow],
    columns: &[(&str, fn(&TraceRow) -> f64)],
) -> Result<()> {
    let root = SVGBackend::new(file, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let t = span(rows.iter().map(|r| r.t));
    let y = span(columns.iter().flat_map(|(_, f)| rows.iter().map(f)));
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(36)
        .y_label_area_size(60)
        .build_cartesian_2d(t, y)
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .x_desc("t [s]")
        .draw()
        .map_err(plot_err)?;
    for (i, (name, f)) in columns.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        chart
            .draw_series(LineSeries::new(rows.iter().map(|r| (r.t, f(r))), color))
            .map_err(plot_err)?
            .label(*name)
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(plot_err)?;
    root.present().map_err(plot_err)?;
    Ok(())
}

/// Writes `<stem>_path.svg`, `<stem>_errors.svg` and `<stem>_steering.svg`
/// into `dir`.
pub fn plot_trace(trace: &Trace, path: &RefPath, dir: &Path, stem: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let rows = &trace.rows;

    let reference = path.sample(0.25);
    let file = dir.join(format!("{stem}_path.svg"));
    let root = SVGBackend::new(&file, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let xs = span(
        reference
            .iter()
            .map(|p| p.x)
            .chain(rows.iter().map(|r| r.x)),
    );
    let ys = span(
        reference
            .iter()
            .map(|p| p.y)
            .chain(rows.iter().map(|r| r.y)),
    );
    // equal axis scaling
    let half = 0.5 * (xs.end - xs.start).max(ys.end - ys.start);
    let (cx, cy) = (0.5 * (xs.start + xs.end), 0.5 * (ys.start + ys.end));
    let mut chart = ChartBuilder::on(&root)
        .caption(format!("{} path", trace.name), ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(36)
        .y_label_area_size(60)
        .build_cartesian_2d(cx - 1.5 * half..cx + 1.5 * half, cy - half..cy + half)
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .x_desc("x [m]")
        .y_desc("y [m]")
        .draw()
        .map_err(plot_err)?;
    chart
        .draw_series(LineSeries::new(reference.iter().map(|p| (p.x, p.y)), BLACK))
        .map_err(plot_err)?
        .label("reference")
        .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], BLACK));
    chart
        .draw_series(LineSeries::new(rows.iter().map(|r| (r.x, r.y)), BLUE))
        .map_err(plot_err)?
        .label("rear axle")
        .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], BLUE));
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(plot_err)?;
    root.present().map_err(plot_err)?;

    series_chart(
        &dir.join(format!("{stem}_errors.svg")),
        "tracking errors [m]",
        rows,
        &[("e", |r| r.e), ("e_f", |r| r.e_f), ("e_l", |r| r.e_l)],
    )?;
    series_chart(
        &dir.join(format!("{stem}_steering.svg")),
        "steering [rad]",
        rows,
        &[("delta_cmd", |r| r.delta_cmd), ("delta", |r| r.delta)],
    )?;
    series_chart(
        &dir.join(format!("{stem}_rates.svg")),
        "steering rate and acceleration",
        rows,
        &[
            ("d/dt delta", |r| r.ddelta_dt),
            ("d2/dt2 delta", |r| r.dddelta_dt),
        ],
    )?;
    Ok(())
}

/// One polyline per record across the comparison axes, baseline at 1.
pub fn plot_comparison(table: &ComparisonTable, file: &Path) -> Result<()> {
    let root = SVGBackend::new(file, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let n = table.axes.len();
    let y = span(
        table
            .rows
            .iter()
            .flat_map(|(_, r)| r.iter().copied())
            .chain([0.0, 1.0]),
    );
    let mut chart = ChartBuilder::on(&root)
        .caption(format!("ratios to {}", table.baseline), ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(36)
        .y_label_area_size(60)
        .build_cartesian_2d(-0.5..n as f64 - 0.5, y)
        .map_err(plot_err)?;
    let axes = table.axes.clone();
    chart
        .configure_mesh()
        .x_labels(n)
        .x_label_formatter(&|x| {
            let i = x.round();
            if (x - i).abs() < 1e-6 && i >= 0.0 && (i as usize) < axes.len() {
                axes[i as usize].clone()
            } else {
                String::new()
            }
        })
        .draw()
        .map_err(plot_err)?;
    for (k, (name, ratios)) in table.rows.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        chart
            .draw_series(LineSeries::new(
                ratios.iter().enumerate().map(|(i, &r)| (i as f64, r)),
                color,
            ))
            .map_err(plot_err)?
            .label(name.as_str())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(plot_err)?;
    root.present().map_err(plot_err)?;
    Ok(())
}
