//! The 28 radiomic features: histogram (5), GLCM (13), run length (5),
//! dependence (2) and gray-tone difference (3).
//!
//! Texture matrices are computed on min-max quantized levels; histogram
//! features use raw intensities. Logarithms are base 2 with `0 log 0 = 0`.

mod directions;
mod glcm;
mod histogram;
mod ngldm;
mod ngtdm;
mod quantize;
mod rlm;
mod sample;

use serde::{Deserialize, Serialize};

pub use directions::{Connectivity, PLANAR_DIRECTIONS, VOLUMETRIC_DIRECTIONS};
pub use glcm::{build_glcm, build_glcm_with, glcm_features, Glcm};
pub use histogram::histogram_features;
pub use ngldm::{build_ngldm, ngldm_features, Ngldm};
pub use ngtdm::{build_ngtdm, ngtdm_features, Ngtdm, COARSENESS_CAP, NGTDM_EPS};
pub use quantize::{bin_level, quantize, quantize_values, QuantizedRoi};
pub use rlm::{build_rlm, build_rlm_with, rlm_features, RunLengthMatrix};
pub use sample::{extract_feature_sample, slice_roi, FeatureSample};

use crate::error::{Error, Result};

pub const FEATURE_COUNT: usize = 28;
pub(crate) const GLCM_FEATURE_COUNT: usize = 13;
pub(crate) const RLM_FEATURE_COUNT: usize = 5;

/// Feature identifiers in canonical feature order.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "hist_mean",
    "hist_contrast",
    "hist_std_dev",
    "hist_skewness",
    "hist_kurtosis",
    "glcm_asm",
    "glcm_contrast",
    "glcm_correlation",
    "glcm_variance",
    "glcm_inverse_difference_moment",
    "glcm_sum_average",
    "glcm_sum_entropy",
    "glcm_sum_variance",
    "glcm_entropy",
    "glcm_difference_variance",
    "glcm_difference_entropy",
    "glcm_imc1",
    "glcm_imc2",
    "rlm_short_run_emphasis",
    "rlm_long_run_emphasis",
    "rlm_gray_level_nonuniformity",
    "rlm_run_length_nonuniformity",
    "rlm_run_percentage",
    "ngldm_small_number_emphasis",
    "ngldm_large_number_emphasis",
    "ngtdm_coarseness",
    "ngtdm_complexity",
    "ngtdm_strength",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureGroup {
    Histogram,
    Glcm,
    Rlm,
    Ngldm,
    Ngtdm,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 5] = [
        FeatureGroup::Histogram,
        FeatureGroup::Glcm,
        FeatureGroup::Rlm,
        FeatureGroup::Ngldm,
        FeatureGroup::Ngtdm,
    ];

    pub fn of(feature: usize) -> FeatureGroup {
        match feature {
            0..=4 => FeatureGroup::Histogram,
            5..=17 => FeatureGroup::Glcm,
            18..=22 => FeatureGroup::Rlm,
            23..=24 => FeatureGroup::Ngldm,
            _ => FeatureGroup::Ngtdm,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureGroup::Histogram => "histogram",
            FeatureGroup::Glcm => "glcm",
            FeatureGroup::Rlm => "rlm",
            FeatureGroup::Ngldm => "ngldm",
            FeatureGroup::Ngtdm => "ngtdm",
        }
    }
}

/// One value per feature, in canonical feature order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub [f64; FEATURE_COUNT]);

impl FeatureVector {
    pub fn get(&self, feature: usize) -> f64 {
        self.0[feature]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl std::ops::Index<usize> for FeatureVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DirectionMode {
    /// Per-axial-slice extraction with in-plane neighbourhoods.
    #[default]
    #[serde(rename = "2d-per-slice")]
    PerSlice2d,
    /// One whole-ROI vector with 3-D neighbourhoods.
    #[serde(rename = "3d-whole-roi")]
    WholeRoi3d,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct FeatureConfig {
    pub ng: usize,
    pub min_slice_voxels: usize,
    /// Fixed at 2; present so manifests can state it.
    pub log_base: u32,
    pub direction_mode: DirectionMode,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            ng: 32,
            min_slice_voxels: 5,
            log_base: 2,
            direction_mode: DirectionMode::PerSlice2d,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ng < 2 || self.ng > u16::MAX as usize {
            return Err(Error::Config(format!("ng must be in 2..=65535, got {}", self.ng)));
        }
        if self.min_slice_voxels < 2 {
            return Err(Error::Config("minSliceVoxels must be >= 2".into()));
        }
        if self.log_base != 2 {
            return Err(Error::Config(format!("logBase is fixed at 2, got {}", self.log_base)));
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn entropy_term(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

/// All 28 features for one ROI given its raw intensities and quantized levels.
pub fn roi_features(raw: &[f64], q: &QuantizedRoi, conn: Connectivity) -> Result<FeatureVector> {
    let hist = histogram_features(raw)?;
    let glcm = glcm_features(&build_glcm(q, conn)?);
    let rlm = rlm_features(&build_rlm(q, conn)?, q.voxel_count())?;
    let ngldm = ngldm_features(&build_ngldm(q, conn, 0))?;
    let ngtdm = ngtdm_features(&build_ngtdm(q, conn)?);

    let mut out = [0.0; FEATURE_COUNT];
    out[..5].copy_from_slice(&hist);
    out[5..18].copy_from_slice(&glcm);
    out[18..23].copy_from_slice(&rlm);
    out[23..25].copy_from_slice(&ngldm);
    out[25..].copy_from_slice(&ngtdm);
    Ok(FeatureVector(out))
}

/// Quantize and extract features from a (volume, mask) pair.
pub fn extract_roi_features(
    v: &crate::model::ScalarVolume,
    m: &crate::model::RoiMask,
    ng: usize,
    conn: Connectivity,
) -> Result<FeatureVector> {
    let q = quantize(v, m, ng)?;
    let raw: Vec<f64> = v
        .voxels()
        .iter()
        .zip(m.bits())
        .filter(|(_, &b)| b)
        .map(|(x, _)| *x)
        .collect();
    roi_features(&raw, &q, conn)
}
