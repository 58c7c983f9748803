//! Surrogate reconstruction operators: dose noise, kernel sharpness and slice
//! thickness, plus the matching z-resampling of reference masks.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::blur_in_plane;
use crate::model::{CaseRecord, Dims, Kernel, ReconCondition, RoiMask, ScalarVolume, Spacing, KERNEL_NAMES};
use crate::rng::{task_rng, SeedPart};

/// Relative slack for thickness comparisons against the base spacing.
const THICKNESS_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct SimulatorConfig {
    /// Noise SD attributed to the full-dose base image.
    #[serde(rename = "refNoiseHU")]
    pub ref_noise_hu: f64,
    /// Sharpness per kernel index, in [-1, 1], nondecreasing.
    pub kernel_kappa_by_index: Vec<f64>,
    pub blur_sigma_max_mm: f64,
    pub unsharp_amount_max: f64,
    pub unsharp_sigma_mm: f64,
    pub seed: u64,
}

impl Default for SimulatorConfig {
    fn default() -> Self {
        let n = KERNEL_NAMES.len();
        SimulatorConfig {
            ref_noise_hu: 10.0,
            kernel_kappa_by_index: (0..n)
                .map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64)
                .collect(),
            blur_sigma_max_mm: 1.5,
            unsharp_amount_max: 1.5,
            unsharp_sigma_mm: 0.8,
            seed: 0,
        }
    }
}

impl SimulatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ref_noise_hu.is_finite() && self.ref_noise_hu > 0.0) {
            return Err(Error::Config(format!("refNoiseHU must be > 0, got {}", self.ref_noise_hu)));
        }
        if self.kernel_kappa_by_index.len() != KERNEL_NAMES.len() {
            return Err(Error::Config(format!(
                "kernelKappaByIndex needs {} values, got {}",
                KERNEL_NAMES.len(),
                self.kernel_kappa_by_index.len()
            )));
        }
        for w in self.kernel_kappa_by_index.windows(2) {
            if w[1] < w[0] {
                return Err(Error::Config("kernelKappaByIndex must be nondecreasing".into()));
            }
        }
        if self
            .kernel_kappa_by_index
            .iter()
            .any(|k| !(-1.0..=1.0).contains(k))
        {
            return Err(Error::Config("kernelKappaByIndex values must lie in [-1, 1]".into()));
        }
        for (name, v) in [
            ("blurSigmaMaxMm", self.blur_sigma_max_mm),
            ("unsharpAmountMax", self.unsharp_amount_max),
            ("unsharpSigmaMm", self.unsharp_sigma_mm),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn kappa(&self, kernel: Kernel) -> f64 {
        self.kernel_kappa_by_index[kernel.index()]
    }
}

/// SD of the noise added at dose fraction `f`: `ref * sqrt(1/f - 1)`.
pub fn added_noise_sd(ref_noise_hu: f64, f: f64) -> f64 {
    ref_noise_hu * (1.0 / f - 1.0).sqrt()
}

/// Add zero-mean Gaussian noise so total noise scales as `ref/sqrt(f)`.
pub fn simulate_dose(
    v: &ScalarVolume,
    f: f64,
    cfg: &SimulatorConfig,
    case_id: &str,
) -> Result<ScalarVolume> {
    if !(f > 0.0 && f <= 1.0) {
        return Err(Error::Domain(format!("dose fraction {f} outside (0, 1]")));
    }
    if f == 1.0 {
        return Ok(v.clone());
    }
    let sd = added_noise_sd(cfg.ref_noise_hu, f);
    let normal = Normal::new(0.0, sd).map_err(|e| Error::Domain(e.to_string()))?;
    let mut rng = task_rng(
        cfg.seed,
        &[SeedPart::Tag("dose"), SeedPart::Text(case_id), SeedPart::Real(f)],
    );
    let voxels = v
        .voxels()
        .iter()
        .map(|&x| x + normal.sample(&mut rng))
        .collect();
    Ok(ScalarVolume::from_parts_unchecked(v.dims(), v.spacing(), voxels))
}

/// Blur (kappa < 0) or unsharp-mask (kappa > 0) in plane; identity at 0.
pub fn simulate_kernel(v: &ScalarVolume, kernel_index: usize, cfg: &SimulatorConfig) -> Result<ScalarVolume> {
    let kernel = Kernel::new(kernel_index)?;
    Ok(apply_kappa(v, cfg.kappa(kernel), cfg))
}

pub(crate) fn apply_kappa(v: &ScalarVolume, kappa: f64, cfg: &SimulatorConfig) -> ScalarVolume {
    let sp = v.spacing();
    if kappa == 0.0 {
        return v.clone();
    }
    if kappa < 0.0 {
        let sigma = kappa.abs() * cfg.blur_sigma_max_mm;
        let out = blur_in_plane(v.voxels(), v.dims(), sigma / sp.sx, sigma / sp.sy);
        return ScalarVolume::from_parts_unchecked(v.dims(), sp, out);
    }
    let blurred = blur_in_plane(
        v.voxels(),
        v.dims(),
        cfg.unsharp_sigma_mm / sp.sx,
        cfg.unsharp_sigma_mm / sp.sy,
    );
    let amount = kappa * cfg.unsharp_amount_max;
    let out = v
        .voxels()
        .iter()
        .zip(&blurred)
        .map(|(&x, &b)| x + amount * (x - b))
        .collect();
    ScalarVolume::from_parts_unchecked(v.dims(), sp, out)
}

/// Geometric overlap weights of each output slab against the input slices.
///
/// Slab `k` covers `[k t, (k+1) t)`; entry `(j, w)` means input slice `j`
/// contributes `w` = overlap / t.
pub fn slab_weights(nz: usize, sz: f64, t: f64) -> Result<Vec<Vec<(usize, f64)>>> {
    let extent = nz as f64 * sz;
    if t < sz * (1.0 - THICKNESS_EPS) {
        return Err(Error::Domain(format!(
            "thickness {t} mm below base spacing {sz} mm; upsampling refused"
        )));
    }
    if t > extent * (1.0 + THICKNESS_EPS) {
        return Err(Error::Domain(format!(
            "thickness {t} mm exceeds volume extent {extent} mm"
        )));
    }
    let n_out = ((extent / t) * (1.0 + THICKNESS_EPS)).floor() as usize;
    let mut slabs = Vec::with_capacity(n_out);
    for k in 0..n_out {
        let lo = k as f64 * t;
        let hi = (k + 1) as f64 * t;
        let first = ((lo / sz).floor() as usize).min(nz - 1);
        let mut w = Vec::new();
        for j in first..nz {
            let s_lo = j as f64 * sz;
            if s_lo >= hi {
                break;
            }
            let s_hi = (j + 1) as f64 * sz;
            let overlap = s_hi.min(hi) - s_lo.max(lo);
            if overlap > 0.0 {
                w.push((j, overlap / t));
            }
        }
        slabs.push(w);
    }
    Ok(slabs)
}

/// Box-filter along z to slabs of width `t_mm`, sampled at stride `t_mm`.
pub fn simulate_thickness(v: &ScalarVolume, t_mm: f64, _cfg: &SimulatorConfig) -> Result<ScalarVolume> {
    resample_volume_z(v, t_mm)
}

pub(crate) fn resample_volume_z(v: &ScalarVolume, t_mm: f64) -> Result<ScalarVolume> {
    let d = v.dims();
    let sp = v.spacing();
    let slabs = slab_weights(d.nz, sp.sz, t_mm)?;
    let plane = d.nx * d.ny;
    let mut out = vec![0.0; plane * slabs.len()];
    for (k, weights) in slabs.iter().enumerate() {
        let dst = &mut out[k * plane..(k + 1) * plane];
        for &(j, w) in weights {
            let src = &v.voxels()[j * plane..(j + 1) * plane];
            for (o, s) in dst.iter_mut().zip(src) {
                *o += w * s;
            }
        }
    }
    Ok(ScalarVolume::from_parts_unchecked(
        Dims::new(d.nx, d.ny, slabs.len()),
        Spacing::new(sp.sx, sp.sy, t_mm),
        out,
    ))
}

/// Derive a thickness-`t_mm` mask: a slab voxel is set iff at least half of
/// its z-extent overlaps set base voxels (ties included).
pub fn resample_mask(m: &RoiMask, from_spacing: Spacing, t_mm: f64) -> Result<RoiMask> {
    let d = m.dims();
    let slabs = slab_weights(d.nz, from_spacing.sz, t_mm)?;
    let plane = d.nx * d.ny;
    let mut bits = vec![false; plane * slabs.len()];
    let mut frac = vec![0.0; plane];
    for (k, weights) in slabs.iter().enumerate() {
        frac.iter_mut().for_each(|f| *f = 0.0);
        for &(j, w) in weights {
            let src = &m.bits()[j * plane..(j + 1) * plane];
            for (f, &b) in frac.iter_mut().zip(src) {
                if b {
                    *f += w;
                }
            }
        }
        for (i, &f) in frac.iter().enumerate() {
            bits[k * plane + i] = f >= 0.5 - 1e-9;
        }
    }
    RoiMask::new(Dims::new(d.nx, d.ny, slabs.len()), bits)
}

/// Dose, then kernel, then thickness.
pub fn reconstruct(case: &CaseRecord, c: &ReconCondition, cfg: &SimulatorConfig) -> Result<ScalarVolume> {
    let dosed = simulate_dose(&case.base_volume, c.dose_fraction, cfg, &case.case_id)?;
    let sharp = apply_kappa(&dosed, cfg.kappa(c.kernel), cfg);
    resample_volume_z(&sharp, c.thickness_mm)
}

/// All thicknesses for one (dose, kernel) pair, sharing the dose and kernel
/// stages. Each output equals `reconstruct` for the matching condition.
pub fn reconstruct_thickness_series(
    case: &CaseRecord,
    dose_fraction: f64,
    kernel: Kernel,
    thicknesses_mm: &[f64],
    cfg: &SimulatorConfig,
) -> Result<Vec<ScalarVolume>> {
    let dosed = simulate_dose(&case.base_volume, dose_fraction, cfg, &case.case_id)?;
    let sharp = apply_kappa(&dosed, cfg.kappa(kernel), cfg);
    thicknesses_mm
        .iter()
        .map(|&t| resample_volume_z(&sharp, t))
        .collect()
}
