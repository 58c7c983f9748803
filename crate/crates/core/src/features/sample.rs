use serde::{Deserialize, Serialize};

use super::{quantize_values, roi_features, Connectivity, DirectionMode, FeatureConfig, FeatureVector, FEATURE_COUNT};
use crate::error::{Error, Result};
use crate::model::{Dims, ReconCondition, RoiMask, ScalarVolume};
use crate::volumetry::mean_sd;

/// Per-slice feature vectors of one (case, condition) image and their
/// per-feature mean and sample SD.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FeatureSample {
    pub case_id: String,
    pub condition: ReconCondition,
    pub slice_indices: Vec<usize>,
    pub per_slice: Vec<FeatureVector>,
    pub mean: FeatureVector,
    pub sd: FeatureVector,
    pub usable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl FeatureSample {
    pub fn n(&self) -> usize {
        self.per_slice.len()
    }

    fn from_vectors(
        case_id: &str,
        condition: ReconCondition,
        slice_indices: Vec<usize>,
        per_slice: Vec<FeatureVector>,
        reason: Option<String>,
    ) -> Self {
        let mut mean = [0.0; FEATURE_COUNT];
        let mut sd = [0.0; FEATURE_COUNT];
        if !per_slice.is_empty() {
            for f in 0..FEATURE_COUNT {
                let vals: Vec<f64> = per_slice.iter().map(|v| v[f]).collect();
                let (m, s) = mean_sd(&vals);
                mean[f] = m;
                sd[f] = s;
            }
        }
        let reason = reason.or_else(|| {
            (per_slice.len() < 2).then(|| format!("{} valid slice(s); need at least 2", per_slice.len()))
        });
        FeatureSample {
            case_id: case_id.to_string(),
            condition,
            slice_indices,
            usable: reason.is_none(),
            per_slice,
            mean: FeatureVector(mean),
            sd: FeatureVector(sd),
            reason,
        }
    }
}

/// Axial slice `z` cropped to the ROI bounding box:
/// `(dims, raw values, membership)`.
pub fn slice_roi(v: &ScalarVolume, m: &RoiMask, z: usize) -> Option<(Dims, Vec<f64>, Vec<bool>)> {
    let d = v.dims();
    let (mut x0, mut x1, mut y0, mut y1) = (usize::MAX, 0, usize::MAX, 0);
    for y in 0..d.ny {
        for x in 0..d.nx {
            if m.get(x, y, z) {
                x0 = x0.min(x);
                x1 = x1.max(x);
                y0 = y0.min(y);
                y1 = y1.max(y);
            }
        }
    }
    if x0 == usize::MAX {
        return None;
    }
    let dims = Dims::new(x1 - x0 + 1, y1 - y0 + 1, 1);
    let mut values = Vec::with_capacity(dims.len());
    let mut inside = Vec::with_capacity(dims.len());
    for y in y0..=y1 {
        for x in x0..=x1 {
            values.push(v.get(x, y, z));
            inside.push(m.get(x, y, z));
        }
    }
    Some((dims, values, inside))
}

fn features_of(dims: Dims, values: &[f64], inside: &[bool], ng: usize, conn: Connectivity) -> Result<FeatureVector> {
    let q = quantize_values(dims, values, inside, ng)?;
    let raw: Vec<f64> = values
        .iter()
        .zip(inside)
        .filter(|(_, &b)| b)
        .map(|(x, _)| *x)
        .collect();
    roi_features(&raw, &q, conn)
}

/// Extract the feature sample for one reconstructed image and its ROI.
///
/// In per-slice mode every axial slice with at least `min_slice_voxels` ROI
/// voxels contributes one vector; slices whose texture matrices are
/// degenerate are skipped. Fewer than two vectors flags the sample unusable.
pub fn extract_feature_sample(
    v: &ScalarVolume,
    m: &RoiMask,
    cfg: &FeatureConfig,
    case_id: &str,
    condition: ReconCondition,
) -> Result<FeatureSample> {
    cfg.validate()?;
    m.check_pairs_with(v)?;
    match cfg.direction_mode {
        DirectionMode::PerSlice2d => {
            let mut indices = Vec::new();
            let mut vectors = Vec::new();
            for z in 0..v.dims().nz {
                if m.slice_count(z) < cfg.min_slice_voxels {
                    continue;
                }
                let Some((dims, values, inside)) = slice_roi(v, m, z) else {
                    continue;
                };
                match features_of(dims, &values, &inside, cfg.ng, Connectivity::Planar) {
                    Ok(fv) if !fv.is_finite() => {
                        log::debug!("{case_id} {}: slice {z} skipped: non-finite feature", condition.label());
                    }
                    Ok(fv) => {
                        indices.push(z);
                        vectors.push(fv);
                    }
                    Err(Error::Degenerate(why)) => {
                        log::debug!("{case_id} {}: slice {z} skipped: {why}", condition.label());
                    }
                    Err(e) => return Err(e),
                }
            }
            Ok(FeatureSample::from_vectors(case_id, condition, indices, vectors, None))
        }
        DirectionMode::WholeRoi3d => {
            if m.count() == 0 {
                return Err(Error::Domain("empty ROI".into()));
            }
            let fv = features_of(v.dims(), v.voxels(), m.bits(), cfg.ng, Connectivity::Volumetric)?;
            Ok(FeatureSample::from_vectors(
                case_id,
                condition,
                Vec::new(),
                vec![fv],
                Some("whole-ROI extraction yields a single vector".into()),
            ))
        }
    }
}
