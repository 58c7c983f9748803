//! Study manifests: JSON description of cases, grid and analysis settings.

use std::collections::BTreeMap;
use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureConfig;
use crate::model::{CaseRecord, ConditionGridConfig, RoiMask, Spacing};
use crate::nrrd::{read_mask, read_volume, write_mask, write_volume};
use crate::phantom::PhantomCase;
use crate::sim::{resample_mask, SimulatorConfig};
use crate::volumetry::StatisticsConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct StudyManifest {
    pub study_id: String,
    pub cases: Vec<CaseEntry>,
    #[serde(default)]
    pub grid: ConditionGridConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CaseEntry {
    pub case_id: String,
    pub volume_path: PathBuf,
    /// Base-resolution mask, resampled to every grid thickness not listed in
    /// `mask_paths_by_thickness`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask_path: Option<PathBuf>,
    /// Keys are thicknesses in mm as decimal strings, e.g. `"1.5"`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub mask_paths_by_thickness: BTreeMap<String, PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing_override: Option<Spacing>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub features: FeatureConfig,
    pub statistics: StatisticsConfig,
    pub simulator: SimulatorConfig,
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        self.features.validate()?;
        self.statistics.validate()?;
        self.simulator.validate()
    }
}

fn json_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    out
}

fn at(pointer: impl Into<String>, e: impl std::fmt::Display) -> Error {
    Error::Manifest {
        pointer: pointer.into(),
        reason: e.to_string(),
    }
}

/// Parse and validate manifest text; relative paths resolve against `base_dir`.
pub fn parse_manifest(text: &str, base_dir: &Path) -> Result<StudyManifest> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let mut m: StudyManifest = serde_path_to_error::deserialize(de).map_err(|e| {
        let pointer = json_pointer(e.path());
        at(if pointer.is_empty() { "/".into() } else { pointer }, e.into_inner())
    })?;
    for c in &mut m.cases {
        c.volume_path = base_dir.join(&c.volume_path);
        if let Some(p) = &mut c.mask_path {
            *p = base_dir.join(&*p);
        }
        for p in c.mask_paths_by_thickness.values_mut() {
            *p = base_dir.join(&*p);
        }
    }
    validate_manifest(&m)?;
    Ok(m)
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<StudyManifest> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_manifest(&text, base)
}

/// Case ids become file names in the results store.
fn valid_case_id(id: &str) -> bool {
    !id.is_empty()
        && !id.starts_with('.')
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

pub fn validate_manifest(m: &StudyManifest) -> Result<()> {
    if m.study_id.trim().is_empty() {
        return Err(at("/studyId", "must not be empty"));
    }
    if m.cases.is_empty() {
        return Err(at("/cases", "at least one case is required"));
    }
    m.grid.validate().map_err(|e| at("/grid", e))?;
    m.analysis.features.validate().map_err(|e| at("/analysis/features", e))?;
    m.analysis.statistics.validate().map_err(|e| at("/analysis/statistics", e))?;
    m.analysis.simulator.validate().map_err(|e| at("/analysis/simulator", e))?;

    let mut seen = HashSet::new();
    for (i, c) in m.cases.iter().enumerate() {
        let here = |field: &str| format!("/cases/{i}/{field}");
        if !valid_case_id(&c.case_id) {
            return Err(at(here("caseId"), format!("{:?} must use only [A-Za-z0-9_.-]", c.case_id)));
        }
        if !seen.insert(c.case_id.as_str()) {
            return Err(at(here("caseId"), format!("duplicate caseId {:?}", c.case_id)));
        }
        if !c.volume_path.is_file() {
            return Err(at(here("volumePath"), format!("{} not found", c.volume_path.display())));
        }
        if let Some(p) = &c.mask_path {
            if !p.is_file() {
                return Err(at(here("maskPath"), format!("{} not found", p.display())));
            }
        }
        for (key, p) in &c.mask_paths_by_thickness {
            let ptr = format!("/cases/{i}/maskPathsByThickness/{key}");
            let t: f64 = key.parse().map_err(|_| at(&ptr, "key is not a thickness in mm"))?;
            if !m.grid.thicknesses_mm.contains(&t) {
                return Err(at(&ptr, format!("thickness {t} is not in grid.thicknessesMm")));
            }
            if !p.is_file() {
                return Err(at(&ptr, format!("{} not found", p.display())));
            }
        }
        if c.mask_path.is_none() {
            if let Some(t) = m
                .grid
                .thicknesses_mm
                .iter()
                .find(|&&t| mask_override(c, t).is_none())
            {
                return Err(at(
                    here("maskPathsByThickness"),
                    format!("no mask for thickness {t} and no maskPath to resample"),
                ));
            }
        }
        if let Some(s) = &c.spacing_override {
            s.validate().map_err(|e| at(here("spacingOverride"), e))?;
        }
    }
    Ok(())
}

fn mask_override(c: &CaseEntry, t: f64) -> Option<&PathBuf> {
    c.mask_paths_by_thickness
        .iter()
        .find(|(k, _)| k.parse::<f64>().ok() == Some(t))
        .map(|(_, p)| p)
}

/// Read a case's images and derive its per-thickness reference masks.
pub fn load_case(entry: &CaseEntry, grid: &ConditionGridConfig) -> Result<CaseRecord> {
    let mut volume = read_volume(&entry.volume_path)?;
    if let Some(s) = entry.spacing_override {
        volume = volume.with_spacing(s)?;
    }
    let base_mask = match &entry.mask_path {
        Some(p) => {
            let m = read_mask(p)?;
            m.check_pairs_with(&volume)?;
            Some(m)
        }
        None => None,
    };
    let d = volume.dims();
    let sz = volume.spacing().sz;
    let mut masks: Vec<(f64, RoiMask)> = Vec::new();
    for t in grid.thicknesses_desc() {
        let mask = match mask_override(entry, t) {
            Some(p) => {
                let m = read_mask(p)?;
                let expect_nz = crate::sim::slab_weights(d.nz, sz, t)?.len();
                let md = m.dims();
                if md.nx != d.nx || md.ny != d.ny || md.nz != expect_nz {
                    return Err(Error::invalid(
                        "mask",
                        format!(
                            "{}: dims {md} do not match the {t} mm reconstruction ({}x{}x{expect_nz})",
                            p.display(),
                            d.nx,
                            d.ny
                        ),
                    ));
                }
                m
            }
            None => {
                let base = base_mask
                    .as_ref()
                    .ok_or_else(|| Error::invalid("case", format!("{}: no mask for {t} mm", entry.case_id)))?;
                resample_mask(base, volume.spacing(), t)?
            }
        };
        masks.push((t, mask));
    }
    Ok(CaseRecord::new(entry.case_id.clone(), volume, masks))
}

/// Write phantoms as volume/mask NRRD pairs in `dir` plus a `manifest.json`
/// that references them by relative path. Returns the manifest path.
pub fn write_phantom_study(
    dir: &Path,
    study_id: &str,
    phantoms: &[PhantomCase],
    grid: &ConditionGridConfig,
    analysis: &AnalysisConfig,
) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut cases = Vec::with_capacity(phantoms.len());
    for p in phantoms {
        let volume_name = format!("{}_volume.nrrd", p.case_id);
        let mask_name = format!("{}_mask.nrrd", p.case_id);
        write_volume(&p.volume, dir.join(&volume_name))?;
        write_mask(&p.mask, p.volume.spacing(), dir.join(&mask_name))?;
        cases.push(CaseEntry {
            case_id: p.case_id.clone(),
            volume_path: volume_name.into(),
            mask_path: Some(mask_name.into()),
            mask_paths_by_thickness: BTreeMap::new(),
            spacing_override: None,
        });
    }
    let manifest = StudyManifest {
        study_id: study_id.to_string(),
        cases,
        grid: grid.clone(),
        analysis: analysis.clone(),
    };
    let path = dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Json {
        path: path.clone(),
        source: e,
    })?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}
