//! Synthetic nodule phantoms and cohorts.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::blur_3d;
use crate::model::{CaseRecord, Dims, RoiMask, ScalarVolume, Spacing};
use crate::rng::{task_rng, SeedPart};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Shape {
    Sphere,
    Ellipsoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "kind")]
pub enum TextureModel {
    Uniform,
    #[serde(rename_all = "camelCase")]
    GaussianField {
        correlation_length_mm: f64,
        #[serde(rename = "amplitudeHU")]
        amplitude_hu: f64,
    },
}

/// Geometry, intensities and texture of one synthetic nodule.
///
/// Voxel `(i, j, k)` has its centre at `((i + 0.5) sx, (j + 0.5) sy, (k + 0.5) sz)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct PhantomSpec {
    pub shape: Shape,
    pub radii_mm: [f64; 3],
    pub center_mm: [f64; 3],
    #[serde(rename = "backgroundHU")]
    pub background_hu: f64,
    #[serde(rename = "nodulePeakHU")]
    pub nodule_peak_hu: f64,
    pub texture_model: TextureModel,
    pub base_spacing: Spacing,
    pub dims: Dims,
    pub seed: u64,
}

impl Default for PhantomSpec {
    /// A 7 mm sphere with Gaussian-field texture on a 24 mm cube sampled at
    /// 0.6 x 0.6 x 0.15 mm, fine enough in z for every default thickness.
    fn default() -> Self {
        let dims = Dims::new(40, 40, 160);
        let spacing = Spacing::new(0.6, 0.6, 0.15);
        PhantomSpec {
            shape: Shape::Sphere,
            radii_mm: [7.0; 3],
            center_mm: [
                dims.nx as f64 * spacing.sx / 2.0,
                dims.ny as f64 * spacing.sy / 2.0,
                dims.nz as f64 * spacing.sz / 2.0,
            ],
            background_hu: -800.0,
            nodule_peak_hu: 40.0,
            texture_model: TextureModel::GaussianField {
                correlation_length_mm: 1.5,
                amplitude_hu: 30.0,
            },
            base_spacing: spacing,
            dims,
            seed: 0,
        }
    }
}

impl PhantomSpec {
    /// Sphere of radius `r` centred on the middle voxel of an isotropic grid.
    pub fn centered_sphere(radius_mm: f64, spacing_mm: f64, n: usize) -> Self {
        let c = ((n / 2) as f64 + 0.5) * spacing_mm;
        PhantomSpec {
            shape: Shape::Sphere,
            radii_mm: [radius_mm; 3],
            center_mm: [c; 3],
            texture_model: TextureModel::Uniform,
            base_spacing: Spacing::isotropic(spacing_mm),
            dims: Dims::new(n, n, n),
            ..PhantomSpec::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.base_spacing.validate()?;
        if self.dims.is_empty() {
            return Err(Error::invalid("phantom", "dims must be positive"));
        }
        if self.radii_mm.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::invalid("phantom", format!("radii {:?} must be > 0", self.radii_mm)));
        }
        if self.shape == Shape::Sphere
            && (self.radii_mm[0] != self.radii_mm[1] || self.radii_mm[0] != self.radii_mm[2])
        {
            return Err(Error::invalid("phantom", "sphere needs equal radii"));
        }
        if let TextureModel::GaussianField {
            correlation_length_mm,
            amplitude_hu,
        } = self.texture_model
        {
            if !(correlation_length_mm.is_finite() && correlation_length_mm > 0.0) {
                return Err(Error::invalid("phantom", "correlationLengthMm must be > 0"));
            }
            if !(amplitude_hu.is_finite() && amplitude_hu >= 0.0) {
                return Err(Error::invalid("phantom", "amplitudeHU must be >= 0"));
            }
        }
        let sp = [self.base_spacing.sx, self.base_spacing.sy, self.base_spacing.sz];
        let n = [self.dims.nx, self.dims.ny, self.dims.nz];
        for axis in 0..3 {
            let lo = self.center_mm[axis] - self.radii_mm[axis];
            let hi = self.center_mm[axis] + self.radii_mm[axis];
            let margin = 2.0 * sp[axis];
            if lo < margin || hi > n[axis] as f64 * sp[axis] - margin {
                return Err(Error::invalid(
                    "phantom",
                    format!("nodule exceeds grid (2-voxel margin) along axis {axis}"),
                ));
            }
        }
        Ok(())
    }

    /// Analytic inside test for the voxel centre at `(x, y, z)`.
    pub fn contains_voxel(&self, x: usize, y: usize, z: usize) -> bool {
        let sp = self.base_spacing;
        let p = [
            (x as f64 + 0.5) * sp.sx,
            (y as f64 + 0.5) * sp.sy,
            (z as f64 + 0.5) * sp.sz,
        ];
        let mut acc = 0.0;
        for a in 0..3 {
            let d = (p[a] - self.center_mm[a]) / self.radii_mm[a];
            acc += d * d;
        }
        acc <= 1.0
    }

    pub fn analytic_volume_mm3(&self) -> f64 {
        4.0 / 3.0 * std::f64::consts::PI * self.radii_mm.iter().product::<f64>()
    }
}

/// Zero-mean field with SD `amplitude` and Gaussian correlation.
fn gaussian_field(spec: &PhantomSpec, corr_mm: f64, amplitude: f64) -> Vec<f64> {
    let mut rng = task_rng(spec.seed, &[SeedPart::Tag("phantom-field")]);
    let white: Vec<f64> = (0..spec.dims.len())
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let sp = spec.base_spacing;
    let mut field = blur_3d(
        &white,
        spec.dims,
        [corr_mm / sp.sx, corr_mm / sp.sy, corr_mm / sp.sz],
    );
    let n = field.len() as f64;
    let mean = field.iter().sum::<f64>() / n;
    let sd = (field.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let scale = if sd > 0.0 { amplitude / sd } else { 0.0 };
    field.iter_mut().for_each(|v| *v = (*v - mean) * scale);
    field
}

pub fn generate_phantom(spec: &PhantomSpec) -> Result<(ScalarVolume, RoiMask)> {
    spec.validate()?;
    let dims = spec.dims;
    let mut mask = RoiMask::empty(dims);
    for z in 0..dims.nz {
        for y in 0..dims.ny {
            for x in 0..dims.nx {
                if spec.contains_voxel(x, y, z) {
                    mask.set(x, y, z, true);
                }
            }
        }
    }
    let field = match spec.texture_model {
        TextureModel::GaussianField {
            correlation_length_mm,
            amplitude_hu,
        } if amplitude_hu > 0.0 => Some(gaussian_field(spec, correlation_length_mm, amplitude_hu)),
        _ => None,
    };
    let voxels = mask
        .bits()
        .iter()
        .enumerate()
        .map(|(i, &inside)| {
            if !inside {
                spec.background_hu
            } else {
                spec.nodule_peak_hu + field.as_ref().map_or(0.0, |f| f[i])
            }
        })
        .collect();
    let volume = ScalarVolume::new(dims, spec.base_spacing, voxels)?;
    Ok((volume, mask))
}

/// Relative (+/-) variation ranges applied per cohort member.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct CohortJitter {
    pub radius_frac: f64,
    pub amplitude_frac: f64,
    pub correlation_frac: f64,
    /// Absolute centre offset range per axis.
    pub center_mm: f64,
}

impl CohortJitter {
    /// Variation used for the synthetic study cohorts.
    pub fn standard() -> Self {
        CohortJitter {
            radius_frac: 0.2,
            amplitude_frac: 0.3,
            correlation_frac: 0.3,
            center_mm: 1.0,
        }
    }
}

/// One generated cohort member before mask resampling.
#[derive(Debug, Clone)]
pub struct PhantomCase {
    pub case_id: String,
    pub spec: PhantomSpec,
    pub volume: ScalarVolume,
    pub mask: RoiMask,
}

pub fn cohort_case_id(index: usize) -> String {
    format!("case_{index:03}")
}

fn jittered_spec(base: &PhantomSpec, jitter: &CohortJitter, seed: u64, index: usize) -> PhantomSpec {
    let mut rng = task_rng(seed, &[SeedPart::Tag("cohort"), SeedPart::Int(index as u64)]);
    let mut sym = |range: f64| -> f64 {
        let u: f64 = rng.random_range(-1.0..=1.0);
        u * range
    };
    let mut spec = base.clone();
    let r_scale = 1.0 + sym(jitter.radius_frac);
    spec.radii_mm.iter_mut().for_each(|r| *r *= r_scale);
    for c in spec.center_mm.iter_mut() {
        *c += sym(jitter.center_mm);
    }
    if let TextureModel::GaussianField {
        correlation_length_mm,
        amplitude_hu,
    } = base.texture_model
    {
        spec.texture_model = TextureModel::GaussianField {
            correlation_length_mm: correlation_length_mm * (1.0 + sym(jitter.correlation_frac)),
            amplitude_hu: amplitude_hu * (1.0 + sym(jitter.amplitude_frac)),
        };
    }
    spec.seed = u64::from_le_bytes(
        crate::rng::derive_seed(seed, &[SeedPart::Tag("case-seed"), SeedPart::Int(index as u64)])[..8]
            .try_into()
            .expect("8 bytes"),
    );
    spec
}

/// `n` jittered phantoms, deterministic per `(seed, index)`.
pub fn generate_cohort_phantoms(
    n: usize,
    base: &PhantomSpec,
    jitter: &CohortJitter,
    seed: u64,
) -> Result<Vec<PhantomCase>> {
    if n == 0 {
        return Err(Error::invalid("cohort", "cohort size must be >= 1"));
    }
    (0..n)
        .into_par_iter()
        .map(|i| {
            let spec = jittered_spec(base, jitter, seed, i);
            let (volume, mask) = generate_phantom(&spec).map_err(|e| {
                Error::invalid("cohort case", format!("case index {i}: {e}"))
            })?;
            Ok(PhantomCase {
                case_id: cohort_case_id(i),
                spec,
                volume,
                mask,
            })
        })
        .collect()
}

/// Cohort as case records with masks resampled to each thickness.
pub fn generate_cohort(
    n: usize,
    base: &PhantomSpec,
    jitter: &CohortJitter,
    seed: u64,
    thicknesses_mm: &[f64],
) -> Result<Vec<CaseRecord>> {
    generate_cohort_phantoms(n, base, jitter, seed)?
        .into_iter()
        .map(|p| CaseRecord::from_base_mask(p.case_id, p.volume, &p.mask, thicknesses_mm))
        .collect()
}
