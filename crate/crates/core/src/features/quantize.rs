use crate::error::{Error, Result};
use crate::model::{Dims, RoiMask, ScalarVolume};

/// ROI voxels binned to gray levels `1..=ng`; level 0 marks voxels outside the ROI.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedRoi {
    pub dims: Dims,
    pub levels: Vec<u16>,
    pub ng: usize,
    pub source_range: (f64, f64),
}

impl QuantizedRoi {
    /// Build directly from levels (0 = outside). Used by tests and callers
    /// that already hold discrete data.
    pub fn from_levels(dims: Dims, levels: Vec<u16>, ng: usize) -> Result<Self> {
        if levels.len() != dims.len() {
            return Err(Error::invalid("quantized roi", "level count does not match dims"));
        }
        if ng < 2 {
            return Err(Error::Domain(format!("gray-level count must be >= 2, got {ng}")));
        }
        if let Some(l) = levels.iter().find(|&&l| l as usize > ng) {
            return Err(Error::invalid("quantized roi", format!("level {l} above ng {ng}")));
        }
        if levels.iter().all(|&l| l == 0) {
            return Err(Error::Domain("empty ROI".into()));
        }
        Ok(QuantizedRoi {
            dims,
            levels,
            ng,
            source_range: (f64::NAN, f64::NAN),
        })
    }

    #[inline]
    pub fn level(&self, idx: usize) -> u16 {
        self.levels[idx]
    }

    pub fn voxel_count(&self) -> usize {
        self.levels.iter().filter(|&&l| l > 0).count()
    }
}

/// Bin index for `x` within `[min, max]`.
#[inline]
pub fn bin_level(x: f64, min: f64, max: f64, ng: usize) -> u16 {
    if max == min {
        return 1;
    }
    let raw = (ng as f64 * (x - min) / (max - min)).floor() as usize + 1;
    raw.min(ng) as u16
}

/// Min-max binning of in-ROI values. `values` and `inside` share `dims`.
pub fn quantize_values(dims: Dims, values: &[f64], inside: &[bool], ng: usize) -> Result<QuantizedRoi> {
    if ng < 2 {
        return Err(Error::Domain(format!("gray-level count must be >= 2, got {ng}")));
    }
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for (&v, &b) in values.iter().zip(inside) {
        if b {
            min = min.min(v);
            max = max.max(v);
        }
    }
    if !min.is_finite() {
        return Err(Error::Domain("empty ROI".into()));
    }
    let levels = values
        .iter()
        .zip(inside)
        .map(|(&v, &b)| if b { bin_level(v, min, max, ng) } else { 0 })
        .collect();
    Ok(QuantizedRoi {
        dims,
        levels,
        ng,
        source_range: (min, max),
    })
}

pub fn quantize(v: &ScalarVolume, m: &RoiMask, ng: usize) -> Result<QuantizedRoi> {
    m.check_pairs_with(v)?;
    quantize_values(v.dims(), v.voxels(), m.bits(), ng)
}
