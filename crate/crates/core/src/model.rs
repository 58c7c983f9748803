//! Shared domain types: volumes, masks, reconstruction conditions and the
//! condition grid.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Grid extent along x, y and z.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl Dims {
    pub const fn new(nx: usize, ny: usize, nz: usize) -> Self {
        Dims { nx, ny, nz }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Linear index, x fastest.
    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.nx * (y + self.ny * z)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize, usize) {
        let x = idx % self.nx;
        let rest = idx / self.nx;
        (x, rest % self.ny, rest / self.ny)
    }

    /// Bounds-checked neighbour lookup.
    #[inline]
    pub fn offset(&self, x: usize, y: usize, z: usize, d: [isize; 3]) -> Option<usize> {
        let xx = x as isize + d[0];
        let yy = y as isize + d[1];
        let zz = z as isize + d[2];
        if xx < 0
            || yy < 0
            || zz < 0
            || xx >= self.nx as isize
            || yy >= self.ny as isize
            || zz >= self.nz as isize
        {
            return None;
        }
        Some(self.index(xx as usize, yy as usize, zz as usize))
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.nx, self.ny, self.nz)
    }
}

/// Voxel spacing in millimetres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Spacing {
    pub sx: f64,
    pub sy: f64,
    pub sz: f64,
}

impl Spacing {
    pub const fn new(sx: f64, sy: f64, sz: f64) -> Self {
        Spacing { sx, sy, sz }
    }

    pub const fn isotropic(s: f64) -> Self {
        Spacing { sx: s, sy: s, sz: s }
    }

    pub fn voxel_volume(&self) -> f64 {
        self.sx * self.sy * self.sz
    }

    pub fn validate(&self) -> Result<()> {
        for (axis, v) in [("x", self.sx), ("y", self.sy), ("z", self.sz)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(
                    "spacing",
                    format!("{axis} spacing must be finite and > 0, got {v}"),
                ));
            }
        }
        Ok(())
    }
}

/// 3-D scalar image with anisotropic spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarVolume {
    dims: Dims,
    spacing: Spacing,
    voxels: Vec<f64>,
}

impl ScalarVolume {
    pub fn new(dims: Dims, spacing: Spacing, voxels: Vec<f64>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::invalid("volume", format!("dims {dims} must be positive")));
        }
        if voxels.len() != dims.len() {
            return Err(Error::invalid(
                "volume",
                format!("{} voxels for dims {dims} ({} expected)", voxels.len(), dims.len()),
            ));
        }
        spacing.validate()?;
        if let Some(i) = voxels.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(
                "volume",
                format!("non-finite intensity {} at voxel {i}", voxels[i]),
            ));
        }
        Ok(ScalarVolume {
            dims,
            spacing,
            voxels,
        })
    }

    pub fn filled(dims: Dims, spacing: Spacing, value: f64) -> Result<Self> {
        Self::new(dims, spacing, vec![value; dims.len()])
    }

    /// Constructor for internal operators whose outputs are finite by construction.
    pub(crate) fn from_parts_unchecked(dims: Dims, spacing: Spacing, voxels: Vec<f64>) -> Self {
        debug_assert_eq!(voxels.len(), dims.len());
        ScalarVolume {
            dims,
            spacing,
            voxels,
        }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn voxels(&self) -> &[f64] {
        &self.voxels
    }

    pub fn into_voxels(self) -> Vec<f64> {
        self.voxels
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> f64 {
        self.voxels[self.dims.index(x, y, z)]
    }

    pub fn with_spacing(mut self, spacing: Spacing) -> Result<Self> {
        spacing.validate()?;
        self.spacing = spacing;
        Ok(self)
    }

    pub fn mean(&self) -> f64 {
        self.voxels.iter().sum::<f64>() / self.voxels.len() as f64
    }
}

/// Binary mask congruent with a [`ScalarVolume`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoiMask {
    dims: Dims,
    bits: Vec<bool>,
}

impl RoiMask {
    pub fn new(dims: Dims, bits: Vec<bool>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::invalid("mask", format!("dims {dims} must be positive")));
        }
        if bits.len() != dims.len() {
            return Err(Error::invalid(
                "mask",
                format!("{} bits for dims {dims} ({} expected)", bits.len(), dims.len()),
            ));
        }
        Ok(RoiMask { dims, bits })
    }

    pub fn empty(dims: Dims) -> Self {
        RoiMask {
            dims,
            bits: vec![false; dims.len()],
        }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> bool {
        self.bits[self.dims.index(x, y, z)]
    }

    pub fn set(&mut self, x: usize, y: usize, z: usize, value: bool) {
        let i = self.dims.index(x, y, z);
        self.bits[i] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Number of set voxels in axial slice `z`.
    pub fn slice_count(&self, z: usize) -> usize {
        let plane = self.dims.nx * self.dims.ny;
        self.bits[z * plane..(z + 1) * plane]
            .iter()
            .filter(|&&b| b)
            .count()
    }

    pub fn check_pairs_with(&self, volume: &ScalarVolume) -> Result<()> {
        if self.dims != volume.dims() {
            return Err(Error::invalid(
                "mask",
                format!("mask dims {} differ from volume dims {}", self.dims, volume.dims()),
            ));
        }
        Ok(())
    }
}

/// Reconstruction kernel names, softest to sharpest.
pub const KERNEL_NAMES: [&str; 10] = [
    "I26f", "I31f", "B31f", "I40f", "B40f", "I50f", "B50f", "I70f", "B60f", "B70f",
];

/// Ordinal sharpness index into [`KERNEL_NAMES`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Kernel(u8);

impl Kernel {
    pub fn new(index: usize) -> Result<Self> {
        if index >= KERNEL_NAMES.len() {
            return Err(Error::Domain(format!(
                "kernel index {index} outside 0..{}",
                KERNEL_NAMES.len() - 1
            )));
        }
        Ok(Kernel(index as u8))
    }

    pub fn from_name(name: &str) -> Result<Self> {
        KERNEL_NAMES
            .iter()
            .position(|k| *k == name)
            .map(|i| Kernel(i as u8))
            .ok_or_else(|| Error::Config(format!("unknown kernel {name:?}")))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn name(self) -> &'static str {
        KERNEL_NAMES[self.index()]
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for Kernel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Kernel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let name = String::deserialize(d)?;
        Kernel::from_name(&name).map_err(serde::de::Error::custom)
    }
}

pub const DEFAULT_DOSES: [f64; 4] = [1.0, 0.5, 0.25, 0.125];
pub const DEFAULT_THICKNESSES_MM: [f64; 8] = [0.6, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0];

/// One point of the reconstruction grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReconCondition {
    pub dose_fraction: f64,
    pub kernel: Kernel,
    pub thickness_mm: f64,
}

impl ReconCondition {
    pub fn new(dose_fraction: f64, kernel: Kernel, thickness_mm: f64) -> Self {
        ReconCondition {
            dose_fraction,
            kernel,
            thickness_mm,
        }
    }

    /// Canonical order: thickness descending, kernel soft to sharp, dose descending.
    pub fn canonical_cmp(&self, other: &Self) -> Ordering {
        other
            .thickness_mm
            .total_cmp(&self.thickness_mm)
            .then(self.kernel.cmp(&other.kernel))
            .then(other.dose_fraction.total_cmp(&self.dose_fraction))
    }

    pub fn dose_percent(&self) -> f64 {
        round6(self.dose_fraction * 100.0)
    }

    /// `T{thickness}_K{kernel}_D{dose%}` with minimal decimals.
    pub fn label(&self) -> String {
        format!(
            "T{}_K{}_D{}",
            round6(self.thickness_mm),
            self.kernel.name(),
            self.dose_percent()
        )
    }
}

pub fn condition_label(c: &ReconCondition) -> String {
    c.label()
}

pub(crate) fn round6(x: f64) -> f64 {
    let r = (x * 1e6).round() / 1e6;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Admissible value sets for the three grid axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ConditionGridConfig {
    #[serde(default = "default_doses")]
    pub doses: Vec<f64>,
    #[serde(default = "default_kernels")]
    pub kernels: Vec<Kernel>,
    #[serde(default = "default_thicknesses", rename = "thicknessesMm")]
    pub thicknesses_mm: Vec<f64>,
}

fn default_doses() -> Vec<f64> {
    DEFAULT_DOSES.to_vec()
}

fn default_kernels() -> Vec<Kernel> {
    (0..KERNEL_NAMES.len()).map(|i| Kernel(i as u8)).collect()
}

fn default_thicknesses() -> Vec<f64> {
    DEFAULT_THICKNESSES_MM.to_vec()
}

impl Default for ConditionGridConfig {
    fn default() -> Self {
        ConditionGridConfig {
            doses: default_doses(),
            kernels: default_kernels(),
            thicknesses_mm: default_thicknesses(),
        }
    }
}

impl ConditionGridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.doses.is_empty() {
            return Err(Error::Config("grid.doses is empty".into()));
        }
        if self.kernels.is_empty() {
            return Err(Error::Config("grid.kernels is empty".into()));
        }
        if self.thicknesses_mm.is_empty() {
            return Err(Error::Config("grid.thicknessesMm is empty".into()));
        }
        for &f in &self.doses {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::Config(format!("dose fraction {f} outside (0, 1]")));
            }
        }
        for &t in &self.thicknesses_mm {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::Config(format!("thickness {t} must be finite and > 0")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.doses.len() * self.kernels.len() * self.thicknesses_mm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, c: &ReconCondition) -> bool {
        self.doses.contains(&c.dose_fraction)
            && self.kernels.contains(&c.kernel)
            && self.thicknesses_mm.contains(&c.thickness_mm)
    }

    /// Thickness axis in canonical (descending) order, duplicates removed.
    pub fn thicknesses_desc(&self) -> Vec<f64> {
        let mut t = self.thicknesses_mm.clone();
        t.sort_by(|a, b| b.total_cmp(a));
        t.dedup();
        t
    }

    pub fn kernels_asc(&self) -> Vec<Kernel> {
        let mut k = self.kernels.clone();
        k.sort();
        k.dedup();
        k
    }

    pub fn doses_desc(&self) -> Vec<f64> {
        let mut d = self.doses.clone();
        d.sort_by(|a, b| b.total_cmp(a));
        d.dedup();
        d
    }
}

/// Every grid point in canonical order.
pub fn enumerate_conditions(grid: &ConditionGridConfig) -> Result<Vec<ReconCondition>> {
    grid.validate()?;
    let doses = grid.doses_desc();
    let kernels = grid.kernels_asc();
    let mut out = Vec::with_capacity(grid.len());
    for t in grid.thicknesses_desc() {
        for &k in &kernels {
            for &f in &doses {
                out.push(ReconCondition::new(f, k, t));
            }
        }
    }
    Ok(out)
}

/// Sort conditions into canonical order in place.
pub fn sort_canonical(conditions: &mut [ReconCondition]) {
    conditions.sort_by(|a, b| a.canonical_cmp(b));
}

/// A case with its base image and the thickness-specific reference masks.
#[derive(Debug, Clone)]
pub struct CaseRecord {
    pub case_id: String,
    pub base_volume: ScalarVolume,
    masks_by_thickness: Vec<(f64, RoiMask)>,
}

impl CaseRecord {
    pub fn new(
        case_id: impl Into<String>,
        base_volume: ScalarVolume,
        masks_by_thickness: Vec<(f64, RoiMask)>,
    ) -> Self {
        let mut masks_by_thickness = masks_by_thickness;
        masks_by_thickness.sort_by(|a, b| b.0.total_cmp(&a.0));
        CaseRecord {
            case_id: case_id.into(),
            base_volume,
            masks_by_thickness,
        }
    }

    /// Derive the per-thickness masks from a base-resolution mask.
    pub fn from_base_mask(
        case_id: impl Into<String>,
        base_volume: ScalarVolume,
        base_mask: &RoiMask,
        thicknesses_mm: &[f64],
    ) -> Result<Self> {
        base_mask.check_pairs_with(&base_volume)?;
        let from = base_volume.spacing();
        let masks = thicknesses_mm
            .iter()
            .map(|&t| Ok((t, crate::sim::resample_mask(base_mask, from, t)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(case_id, base_volume, masks))
    }

    pub fn mask_for(&self, thickness_mm: f64) -> Option<&RoiMask> {
        self.masks_by_thickness
            .iter()
            .find(|(t, _)| *t == thickness_mm)
            .map(|(_, m)| m)
    }

    pub fn masks(&self) -> &[(f64, RoiMask)] {
        &self.masks_by_thickness
    }
}
