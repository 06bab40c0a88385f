use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::plot::{heatmap, scatter, LineStyle};
use super::{FluxDifferenceRecord, FourierStack, NoiseReference};
use crate::error::{Error, Result};

/// Paths written by [`emit_report`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReportFiles {
    pub records_csv: PathBuf,
    pub scatter_plots: Vec<PathBuf>,
    pub scatter_points: Vec<PathBuf>,
    pub reference_levels: Vec<PathBuf>,
    pub heatmaps: Vec<PathBuf>,
    pub heatmap_data: Vec<PathBuf>,
}

#[derive(Serialize)]
struct PlotPoint<'a> {
    object_id: &'a str,
    log10_sum_abs_orig: f64,
    log10_sum_abs_diff: f64,
}

#[derive(Serialize)]
struct ReferenceLevel<'a> {
    band: &'a str,
    level: &'a str,
    value: f64,
    log10_value: f64,
}

#[derive(Serialize)]
struct Bin {
    row: usize,
    col: usize,
    amplitude: f64,
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>, header: &[&str]) -> Result<()> {
    let to_err = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Format(format!("{}: {other:?}", path.display())),
    };
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(to_err)?;
    w.write_record(header).map_err(to_err)?;
    for r in rows {
        w.serialize(r).map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn file_safe(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

/// Write the record table, one log-log scatter per band with its reference
/// levels, and one heat map per stack. Every image has a CSV sidecar of the
/// values it draws.
pub fn emit_report(
    records: &[FluxDifferenceRecord],
    stacks: &[(String, FourierStack)],
    references: &[NoiseReference],
    out_dir: &Path,
) -> Result<ReportFiles> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut files = ReportFiles {
        records_csv: out_dir.join("flux_differences.csv"),
        ..Default::default()
    };
    write_rows(
        &files.records_csv,
        records,
        &["object_id", "band", "sum_abs_orig", "sum_abs_diff"],
    )?;

    let bands: BTreeSet<&str> = records.iter().map(|r| r.band.as_str()).collect();
    for band in bands {
        let points: Vec<PlotPoint> = records
            .iter()
            .filter(|r| r.band == band && r.sum_abs_orig > 0.0 && r.sum_abs_diff > 0.0)
            .map(|r| PlotPoint {
                object_id: &r.object_id,
                log10_sum_abs_orig: r.sum_abs_orig.log10(),
                log10_sum_abs_diff: r.sum_abs_diff.log10(),
            })
            .collect();
        let levels: Vec<ReferenceLevel> = references
            .iter()
            .filter(|r| r.band == band)
            .flat_map(|r| {
                [("sigma", r.sigma), ("sqrt2_sigma", r.sqrt2_sigma)].map(|(level, value)| ReferenceLevel {
                    band,
                    level,
                    value,
                    log10_value: value.log10(),
                })
            })
            .collect();
        let stem = format!("scatter_{}", file_safe(band));
        let png = out_dir.join(format!("{stem}.png"));
        let xy: Vec<(f64, f64)> = points
            .iter()
            .map(|p| (p.log10_sum_abs_orig, p.log10_sum_abs_diff))
            .collect();
        let lines: Vec<(f64, LineStyle)> = levels
            .iter()
            .filter(|l| l.log10_value.is_finite())
            .map(|l| {
                let style = if l.level == "sigma" { LineStyle::Dotted } else { LineStyle::Dashed };
                (l.log10_value, style)
            })
            .collect();
        let points_csv = out_dir.join(format!("{stem}_points.csv"));
        let levels_csv = out_dir.join(format!("{stem}_reference.csv"));
        write_rows(
            &points_csv,
            &points,
            &["object_id", "log10_sum_abs_orig", "log10_sum_abs_diff"],
        )?;
        write_rows(&levels_csv, &levels, &["band", "level", "value", "log10_value"])?;
        scatter(&xy, &lines, &png)?;
        files.scatter_plots.push(png);
        files.scatter_points.push(points_csv);
        files.reference_levels.push(levels_csv);
    }

    for (name, stack) in stacks {
        let stem = format!("fourier_{}", file_safe(name));
        let png = out_dir.join(format!("{stem}.png"));
        let data = out_dir.join(format!("{stem}.csv"));
        let a = &stack.amplitude;
        let bins = (0..a.height()).flat_map(|row| {
            (0..a.width()).map(move |col| Bin {
                row,
                col,
                amplitude: a.get(row, col),
            })
        });
        write_rows(&data, bins, &["row", "col", "amplitude"])?;
        heatmap(a, &png)?;
        files.heatmaps.push(png);
        files.heatmap_data.push(data);
    }
    Ok(files)
}
