//! In-memory study execution: reconstruct every condition of every case,
//! extract feature samples and measure volumes.

use rayon::prelude::*;

use crate::compat::{build_map, CompatibilityMap, Ordering, SampleTable};
use crate::error::{Error, Result};
use crate::features::{extract_feature_sample, FeatureSample};
use crate::manifest::AnalysisConfig;
use crate::model::{enumerate_conditions, CaseRecord, ConditionGridConfig, Kernel, ReconCondition, Spacing};
use crate::sim::reconstruct_thickness_series;
use crate::volumetry::{measure_volume, VolumeSeries};

/// Per-thickness reference-mask volumes of one case, thickest first.
pub fn case_volumes(case: &CaseRecord) -> Result<VolumeSeries> {
    let sp = case.base_volume.spacing();
    let entries = case
        .masks()
        .iter()
        .map(|(t, m)| Ok((*t, measure_volume(m, Spacing::new(sp.sx, sp.sy, *t))?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(VolumeSeries {
        case_id: case.case_id.clone(),
        entries,
    })
}

/// Samples of one case at one (dose, kernel) pair, one per thickness in the
/// order given.
pub fn extract_series(
    case: &CaseRecord,
    dose_fraction: f64,
    kernel: Kernel,
    thicknesses_mm: &[f64],
    analysis: &AnalysisConfig,
) -> Result<Vec<FeatureSample>> {
    let images = reconstruct_thickness_series(case, dose_fraction, kernel, thicknesses_mm, &analysis.simulator)?;
    thicknesses_mm
        .iter()
        .zip(images)
        .map(|(&t, img)| {
            let mask = case
                .mask_for(t)
                .ok_or_else(|| Error::invalid("case", format!("{}: no mask for {t} mm", case.case_id)))?;
            let c = ReconCondition::new(dose_fraction, kernel, t);
            extract_feature_sample(&img, mask, &analysis.features, &case.case_id, c)
        })
        .collect()
}

/// One unit of parallel work: a case at one (dose, kernel) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesTask {
    pub case: usize,
    pub dose_fraction: f64,
    pub kernel: Kernel,
}

pub fn series_tasks(n_cases: usize, grid: &ConditionGridConfig) -> Vec<SeriesTask> {
    let mut out = Vec::new();
    for case in 0..n_cases {
        for kernel in grid.kernels_asc() {
            for dose_fraction in grid.doses_desc() {
                out.push(SeriesTask {
                    case,
                    dose_fraction,
                    kernel,
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct StudyResults {
    pub conditions: Vec<ReconCondition>,
    pub case_ids: Vec<String>,
    pub samples: Vec<FeatureSample>,
    pub volumes: Vec<VolumeSeries>,
}

impl StudyResults {
    pub fn table(&self) -> Result<SampleTable> {
        SampleTable::from_samples(&self.conditions, &self.case_ids, &self.samples)
    }

    pub fn map(&self, analysis: &AnalysisConfig, ordering: Ordering) -> Result<CompatibilityMap> {
        Ok(build_map(&self.table()?, &analysis.statistics, ordering))
    }
}

/// Run the whole grid over in-memory cases on the current thread pool.
pub fn analyze_cases(
    cases: &[CaseRecord],
    grid: &ConditionGridConfig,
    analysis: &AnalysisConfig,
) -> Result<StudyResults> {
    analysis.validate()?;
    let conditions = enumerate_conditions(grid)?;
    let thicknesses = grid.thicknesses_desc();
    let tasks = series_tasks(cases.len(), grid);
    let batches: Vec<Vec<FeatureSample>> = tasks
        .par_iter()
        .map(|t| extract_series(&cases[t.case], t.dose_fraction, t.kernel, &thicknesses, analysis))
        .collect::<Result<_>>()?;
    let volumes = cases.iter().map(case_volumes).collect::<Result<Vec<_>>>()?;
    Ok(StudyResults {
        conditions,
        case_ids: cases.iter().map(|c| c.case_id.clone()).collect(),
        samples: batches.into_iter().flatten().collect(),
        volumes,
    })
}
