//! Nodule volumetry, per-case volume normalisation and the two-sample
//! compatibility test shared with the radiomic analysis.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::model::{RoiMask, Spacing};

pub const DEFAULT_T_THRESHOLD: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum PValueModel {
    /// Two-tailed standard normal tail; `t = 1.96` maps to `p = 0.05`.
    #[default]
    Normal,
    /// Two-tailed Student t with Welch-Satterthwaite degrees of freedom.
    StudentT,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct StatisticsConfig {
    pub t_threshold: f64,
    pub p_value_model: PValueModel,
}

impl Default for StatisticsConfig {
    fn default() -> Self {
        StatisticsConfig {
            t_threshold: DEFAULT_T_THRESHOLD,
            p_value_model: PValueModel::Normal,
        }
    }
}

impl StatisticsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_threshold.is_finite() && self.t_threshold > 0.0) {
            return Err(Error::Config(format!("tThreshold must be > 0, got {}", self.t_threshold)));
        }
        Ok(())
    }

    pub fn is_compatible(&self, t: f64) -> bool {
        t < self.t_threshold
    }
}

/// Volume of a mask in mm³.
pub fn measure_volume(m: &RoiMask, spacing: Spacing) -> Result<f64> {
    let n = m.count();
    if n == 0 {
        return Err(Error::Degenerate("cannot measure an empty mask".into()));
    }
    Ok(n as f64 * spacing.voxel_volume())
}

/// Per-thickness volumes of one case, in mm³.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VolumeSeries {
    pub case_id: String,
    pub entries: Vec<(f64, f64)>,
}

/// Volumes divided by the case's mean volume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NormalizedVolumeSeries {
    pub case_id: String,
    pub entries: Vec<(f64, f64)>,
}

impl NormalizedVolumeSeries {
    pub fn value_at(&self, thickness_mm: f64) -> Option<f64> {
        self.entries
            .iter()
            .find(|(t, _)| *t == thickness_mm)
            .map(|(_, v)| *v)
    }
}

pub fn normalize_series(s: &VolumeSeries) -> Result<NormalizedVolumeSeries> {
    if s.entries.len() < 2 {
        return Err(Error::Domain(format!(
            "case {}: need at least 2 thicknesses to normalise",
            s.case_id
        )));
    }
    if let Some((t, v)) = s.entries.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::Domain(format!(
            "case {}: nonpositive volume {v} at {t} mm",
            s.case_id
        )));
    }
    let mean = s.entries.iter().map(|(_, v)| v).sum::<f64>() / s.entries.len() as f64;
    Ok(NormalizedVolumeSeries {
        case_id: s.case_id.clone(),
        entries: s.entries.iter().map(|&(t, v)| (t, v / mean)).collect(),
    })
}

/// `|m1 - m2| / sqrt(s1²/n1 + s2²/n2)`.
///
/// Zero standard error gives 0 for equal means and `+inf` otherwise.
pub fn t_statistic(m1: f64, s1: f64, n1: usize, m2: f64, s2: f64, n2: usize) -> Result<f64> {
    if n1 < 2 || n2 < 2 {
        return Err(Error::Domain(format!("sample sizes must be >= 2, got {n1} and {n2}")));
    }
    if s1 < 0.0 || s2 < 0.0 {
        return Err(Error::Domain("standard deviations must be >= 0".into()));
    }
    let diff = (m1 - m2).abs();
    let se = (s1 * s1 / n1 as f64 + s2 * s2 / n2 as f64).sqrt();
    if se == 0.0 {
        return Ok(if diff == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok(diff / se)
}

/// `t < 1.96`, strict.
pub fn is_compatible(t: f64) -> bool {
    t < DEFAULT_T_THRESHOLD
}

/// Two-tailed p-value of a nonnegative `t`.
pub fn p_value(t: f64, model: PValueModel, welch_df: Option<f64>) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    if t.is_infinite() {
        return 0.0;
    }
    match (model, welch_df) {
        (PValueModel::StudentT, Some(df)) if df.is_finite() && df > 0.0 => {
            let dist = StudentsT::new(0.0, 1.0, df).expect("valid df");
            2.0 * (1.0 - dist.cdf(t))
        }
        _ => erfc(t / std::f64::consts::SQRT_2),
    }
}

/// Welch-Satterthwaite degrees of freedom.
pub fn welch_df(s1: f64, n1: usize, s2: f64, n2: usize) -> f64 {
    let a = s1 * s1 / n1 as f64;
    let b = s2 * s2 / n2 as f64;
    let denom = a * a / (n1 as f64 - 1.0) + b * b / (n2 as f64 - 1.0);
    if denom == 0.0 {
        return f64::INFINITY;
    }
    (a + b).powi(2) / denom
}

pub(crate) fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Square matrix with axis labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledMatrix {
    pub labels: Vec<String>,
    /// Row-major; `None` marks an undefined cell.
    pub values: Vec<Vec<Option<f64>>>,
}

impl LabeledMatrix {
    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[i][j]
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.size();
        (0..n).all(|i| (0..n).all(|j| self.values[i][j] == self.values[j][i]))
    }
}

pub fn thickness_label(t: f64) -> String {
    format!("{t:.2}")
}

fn shared_thicknesses(cohort: &[NormalizedVolumeSeries]) -> Result<Vec<f64>> {
    let mut ts: Vec<f64> = cohort[0].entries.iter().map(|(t, _)| *t).collect();
    ts.sort_by(|a, b| b.total_cmp(a));
    for s in &cohort[1..] {
        let mut other: Vec<f64> = s.entries.iter().map(|(t, _)| *t).collect();
        other.sort_by(|a, b| b.total_cmp(a));
        if other != ts {
            return Err(Error::invalid(
                "cohort",
                format!("case {} has a different thickness set", s.case_id),
            ));
        }
    }
    Ok(ts)
}

/// Per-thickness cohort statistics of normalised volumes (mean, SD, n).
fn cohort_stats(cohort: &[NormalizedVolumeSeries], ts: &[f64]) -> Vec<(f64, f64)> {
    ts.iter()
        .map(|&t| {
            let vals: Vec<f64> = cohort.iter().filter_map(|s| s.value_at(t)).collect();
            mean_sd(&vals)
        })
        .collect()
}

/// Two-tailed p-values for every thickness pair, thickest first.
pub fn thickness_p_matrix(
    cohort: &[NormalizedVolumeSeries],
    stats: &StatisticsConfig,
) -> Result<LabeledMatrix> {
    if cohort.len() < 2 {
        return Err(Error::Domain("need at least 2 cases".into()));
    }
    let ts = shared_thicknesses(cohort)?;
    let moments = cohort_stats(cohort, &ts);
    let n = cohort.len();
    let k = ts.len();
    let mut values = vec![vec![Some(1.0); k]; k];
    for i in 0..k {
        for j in (i + 1)..k {
            let (m1, s1) = moments[i];
            let (m2, s2) = moments[j];
            let t = t_statistic(m1, s1, n, m2, s2, n)?;
            let df = welch_df(s1, n, s2, n);
            let p = p_value(t, stats.p_value_model, Some(df));
            values[i][j] = Some(p);
            values[j][i] = Some(p);
        }
    }
    Ok(LabeledMatrix {
        labels: ts.iter().map(|&t| thickness_label(t)).collect(),
        values,
    })
}

/// Percent deviation of normalised volume from the case average at one thickness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VolumeTrendRow {
    pub thickness_mm: f64,
    pub mean_percent: f64,
    pub sd_percent: f64,
}

/// Rows ordered by ascending thickness.
pub fn volume_trend_report(cohort: &[NormalizedVolumeSeries]) -> Result<Vec<VolumeTrendRow>> {
    if cohort.len() < 2 {
        return Err(Error::Domain("need at least 2 cases".into()));
    }
    let mut ts = shared_thicknesses(cohort)?;
    ts.reverse();
    Ok(ts
        .iter()
        .map(|&t| {
            let devs: Vec<f64> = cohort
                .iter()
                .filter_map(|s| s.value_at(t))
                .map(|v| (v - 1.0) * 100.0)
                .collect();
            let (mean, sd) = mean_sd(&devs);
            VolumeTrendRow {
                thickness_mm: t,
                mean_percent: mean,
                sd_percent: sd,
            }
        })
        .collect())
}
