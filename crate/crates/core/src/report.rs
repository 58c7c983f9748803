//! Report emission from a completed results store: CSV tables, binary PPM
//! heatmaps and JSON. Output is a pure function of the store contents.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::compat::{feature_robustness_report, marginal_matrix, AxisRobustness, Axis, Ordering};
use crate::error::{Error, Result};
use crate::features::FEATURE_COUNT;
use crate::store::ResultsStore;
use crate::volumetry::{
    normalize_series, thickness_label, thickness_p_matrix, volume_trend_report, LabeledMatrix, StatisticsConfig,
    VolumeSeries, VolumeTrendRow,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportKind {
    Map,
    Kernel,
    Thickness,
    Dose,
    Volumes,
    Features,
}

impl std::str::FromStr for ReportKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "map" => ReportKind::Map,
            "kernel" => ReportKind::Kernel,
            "thickness" => ReportKind::Thickness,
            "dose" => ReportKind::Dose,
            "volumes" => ReportKind::Volumes,
            "features" => ReportKind::Features,
            other => return Err(Error::Config(format!("unknown report {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Ppm,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "csv" => ReportFormat::Csv,
            "ppm" => ReportFormat::Ppm,
            "json" => ReportFormat::Json,
            other => return Err(Error::Config(format!("unknown format {other:?}"))),
        })
    }
}

/// Fixed two-decimal percentage, `NA` when undefined.
pub fn format_percent(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.2}"),
        None => "NA".into(),
    }
}

/// Four significant digits; scientific notation below 1e-4.
pub fn format_p(v: Option<f64>) -> String {
    let Some(p) = v else {
        return "NA".into();
    };
    if p == 0.0 {
        return "0.000".into();
    }
    if p.abs() < 1e-4 {
        return format!("{p:.3e}");
    }
    let decimals = (3 - p.abs().log10().floor() as i32).max(0) as usize;
    format!("{p:.decimals$}")
}

/// Labelled CSV: header row and first column carry the labels.
pub fn matrix_csv(m: &LabeledMatrix, fmt: impl Fn(Option<f64>) -> String) -> String {
    let mut out = String::new();
    for l in &m.labels {
        out.push(',');
        out.push_str(l);
    }
    out.push('\n');
    for (label, row) in m.labels.iter().zip(&m.values) {
        out.push_str(label);
        for v in row {
            out.push(',');
            out.push_str(&fmt(*v));
        }
        out.push('\n');
    }
    out
}

/// Parse a labelled CSV matrix back; `NA` becomes `None`.
pub fn parse_matrix_csv(text: &str) -> Result<LabeledMatrix> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::invalid("csv", "empty"))?;
    let labels: Vec<String> = header.split(',').skip(1).map(str::to_string).collect();
    let mut values = Vec::new();
    for line in lines.take(labels.len()) {
        let row = line
            .split(',')
            .skip(1)
            .map(|c| match c {
                "NA" => Ok(None),
                x => x
                    .parse::<f64>()
                    .map(Some)
                    .map_err(|_| Error::invalid("csv", format!("bad cell {x:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        if row.len() != labels.len() {
            return Err(Error::invalid("csv", "ragged row"));
        }
        values.push(row);
    }
    if values.len() != labels.len() {
        return Err(Error::invalid("csv", "matrix is not square"));
    }
    Ok(LabeledMatrix { labels, values })
}

/// Linear ramp: 100 is pure green, 0 pure red; undefined cells are grey.
pub fn ramp_color(percent: Option<f64>) -> [u8; 3] {
    match percent {
        None => [128, 128, 128],
        Some(p) => {
            let g = (p.clamp(0.0, 100.0) / 100.0 * 255.0).round() as u8;
            [255 - g, g, 0]
        }
    }
}

/// Binary P6 image, one pixel per cell, row 0 at the top.
pub fn ppm(values: &[Vec<Option<f64>>]) -> Vec<u8> {
    let h = values.len();
    let w = values.first().map_or(0, Vec::len);
    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    for row in values {
        for v in row {
            out.extend_from_slice(&ramp_color(*v));
        }
    }
    out
}

fn json_bytes<T: Serialize>(v: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(v).expect("report serialises");
    out.push(b'\n');
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VolumeReport {
    pub trend: Vec<VolumeTrendRow>,
    pub p_values: LabeledMatrix,
}

pub fn volume_report(series: &[VolumeSeries], stats: &StatisticsConfig) -> Result<VolumeReport> {
    let normalized = series.iter().map(normalize_series).collect::<Result<Vec<_>>>()?;
    Ok(VolumeReport {
        trend: volume_trend_report(&normalized)?,
        p_values: thickness_p_matrix(&normalized, stats)?,
    })
}

/// Trend rows formatted like `+0.39% ±1.59`.
pub fn trend_summary(row: &VolumeTrendRow) -> String {
    format!("{:+.2}% ±{:.2}", row.mean_percent, row.sd_percent)
}

fn volume_csv(r: &VolumeReport) -> String {
    let mut out = String::from("thicknessMm,meanPercent,sdPercent,summary\n");
    for row in &r.trend {
        writeln!(
            out,
            "{},{:+.2},{:.2},{}",
            thickness_label(row.thickness_mm),
            row.mean_percent,
            row.sd_percent,
            trend_summary(row)
        )
        .expect("string write");
    }
    out.push('\n');
    out.push_str(&matrix_csv(&r.p_values, format_p));
    out
}

fn features_csv(rows: &[AxisRobustness]) -> String {
    let mut out = String::from("axis,rank,feature,group,percent\n");
    for axis in rows {
        for (rank, f) in axis.features.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{}",
                axis.axis.name(),
                rank + 1,
                f.name,
                f.group.name(),
                format_percent(f.percent)
            )
            .expect("string write");
        }
    }
    out.push_str("\naxis,group,averagePercent\n");
    for axis in rows {
        for (g, avg) in &axis.group_averages {
            writeln!(out, "{},{},{}", axis.axis.name(), g.name(), format_percent(*avg)).expect("string write");
        }
    }
    out
}

/// Features (rows, canonical feature order) by axis (columns: dose, kernel, thickness).
fn features_grid(rows: &[AxisRobustness]) -> Vec<Vec<Option<f64>>> {
    (0..FEATURE_COUNT)
        .map(|f| {
            rows.iter()
                .map(|a| a.features.iter().find(|r| r.feature == f).and_then(|r| r.percent))
                .collect()
        })
        .collect()
}

/// p-values shown as green when compatible at the 0.05 level, fading to red.
fn p_as_percent(p: Option<f64>) -> Option<f64> {
    p.map(|p| (p / 0.05).min(1.0) * 100.0)
}

/// Render one report from a completed store.
pub fn render_report(store: &ResultsStore, kind: ReportKind, format: ReportFormat, ordering: Ordering) -> Result<Vec<u8>> {
    let config = store.require_complete()?;
    let stats = config.analysis.statistics;
    let map = || -> Result<_> {
        store
            .read_cells()?
            .ok_or_else(|| Error::Store("compatibility cells missing; rerun the study".into()))
    };
    let axis = match kind {
        ReportKind::Kernel => Some(Axis::Kernel),
        ReportKind::Thickness => Some(Axis::Thickness),
        ReportKind::Dose => Some(Axis::Dose),
        _ => None,
    };
    Ok(match kind {
        ReportKind::Map => {
            let m = map()?.reordered(ordering);
            let matrix = m.ratio_matrix();
            match format {
                ReportFormat::Csv => matrix_csv(&matrix, format_percent).into_bytes(),
                ReportFormat::Ppm => ppm(&matrix.values),
                ReportFormat::Json => json_bytes(&matrix),
            }
        }
        ReportKind::Kernel | ReportKind::Thickness | ReportKind::Dose => {
            let matrix = marginal_matrix(axis.expect("axis report"), &map()?)?;
            match format {
                ReportFormat::Csv => matrix_csv(&matrix, format_percent).into_bytes(),
                ReportFormat::Ppm => ppm(&matrix.values),
                ReportFormat::Json => json_bytes(&matrix),
            }
        }
        ReportKind::Volumes => {
            let r = volume_report(&store.read_volumes()?, &stats)?;
            match format {
                ReportFormat::Csv => volume_csv(&r).into_bytes(),
                ReportFormat::Ppm => {
                    let v: Vec<Vec<Option<f64>>> = r
                        .p_values
                        .values
                        .iter()
                        .map(|row| row.iter().map(|p| p_as_percent(*p)).collect())
                        .collect();
                    ppm(&v)
                }
                ReportFormat::Json => json_bytes(&r),
            }
        }
        ReportKind::Features => {
            let (_, table) = store.load_table()?;
            let rows = feature_robustness_report(&table, &stats);
            match format {
                ReportFormat::Csv => features_csv(&rows).into_bytes(),
                ReportFormat::Ppm => ppm(&features_grid(&rows)),
                ReportFormat::Json => json_bytes(&rows),
            }
        }
    })
}
