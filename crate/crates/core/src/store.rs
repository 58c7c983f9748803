//! On-disk results store and the resumable study runner.
//!
//! Layout:
//!
//! ```text
//! <root>/config.json                  grid + analysis snapshot, case ids
//! <root>/metadata.json                version, timestamps, input paths
//! <root>/samples/<case>/<label>.json  one FeatureSample per (case, condition)
//! <root>/volumes.csv                  caseId,thicknessMm,volumeMm3
//! <root>/cells.json                   compatibility map in canonical order
//! <root>/index.json                   completion status
//! ```
//!
//! Everything except `metadata.json` is a pure function of the config and
//! inputs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::compat::{build_map, CompatibilityMap, Ordering, SampleTable};
use crate::error::{Error, Result};
use crate::features::FeatureSample;
use crate::manifest::{load_case, AnalysisConfig, StudyManifest};
use crate::model::{enumerate_conditions, CaseRecord, ConditionGridConfig, ReconCondition};
use crate::study::{case_volumes, extract_series, series_tasks};
use crate::volumetry::VolumeSeries;

/// Configuration snapshot; a store is only resumed under an identical one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct StoreConfig {
    pub study_id: String,
    pub case_ids: Vec<String>,
    pub grid: ConditionGridConfig,
    pub analysis: AnalysisConfig,
}

impl StoreConfig {
    pub fn from_manifest(m: &StudyManifest) -> Self {
        StoreConfig {
            study_id: m.study_id.clone(),
            case_ids: m.cases.iter().map(|c| c.case_id.clone()).collect(),
            grid: m.grid.clone(),
            analysis: m.analysis.clone(),
        }
    }

    pub fn conditions(&self) -> Result<Vec<ReconCondition>> {
        enumerate_conditions(&self.grid)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CaseFailure {
    pub case_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StoreIndex {
    pub complete: bool,
    pub case_ids: Vec<String>,
    pub condition_labels: Vec<String>,
    pub failed_cases: Vec<CaseFailure>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct Metadata {
    version: String,
    manifest: Option<PathBuf>,
    inputs: Vec<(String, PathBuf)>,
    seed: u64,
    started_unix: u64,
    finished_unix: u64,
    computed_series: usize,
    skipped_series: usize,
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("store records serialise");
    out.push(b'\n');
    out
}

/// Handle on a results directory.
#[derive(Debug, Clone)]
pub struct ResultsStore {
    root: PathBuf,
}

impl ResultsStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        ResultsStore { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn sample_path(&self, case_id: &str, c: &ReconCondition) -> PathBuf {
        self.root
            .join("samples")
            .join(case_id)
            .join(format!("{}.json", c.label()))
    }

    fn read_json<T: DeserializeOwned>(&self, path: &Path) -> Result<Option<T>> {
        let bytes = match fs::read(path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(Error::io(path, e)),
        };
        serde_json::from_slice(&bytes)
            .map(Some)
            .map_err(|e| Error::Store(format!("corrupt file {}: {e}", path.display())))
    }

    pub fn read_config(&self) -> Result<Option<StoreConfig>> {
        self.read_json(&self.path("config.json"))
    }

    pub fn write_config(&self, c: &StoreConfig) -> Result<()> {
        write_atomic(&self.path("config.json"), &to_json(c))
    }

    pub fn read_index(&self) -> Result<Option<StoreIndex>> {
        self.read_json(&self.path("index.json"))
    }

    pub fn write_index(&self, idx: &StoreIndex) -> Result<()> {
        write_atomic(&self.path("index.json"), &to_json(idx))
    }

    /// `Ok(None)` if absent; a store error if unreadable or mislabelled.
    pub fn read_sample(&self, case_id: &str, c: &ReconCondition) -> Result<Option<FeatureSample>> {
        let path = self.sample_path(case_id, c);
        let Some(s) = self.read_json::<FeatureSample>(&path)? else {
            return Ok(None);
        };
        if s.case_id != case_id || s.condition.label() != c.label() {
            return Err(Error::Store(format!(
                "corrupt file {}: holds {} {}",
                path.display(),
                s.case_id,
                s.condition.label()
            )));
        }
        Ok(Some(s))
    }

    pub fn write_sample(&self, s: &FeatureSample) -> Result<()> {
        write_atomic(&self.sample_path(&s.case_id, &s.condition), &to_json(s))
    }

    pub fn write_volumes(&self, series: &[VolumeSeries]) -> Result<()> {
        let mut out = String::from("caseId,thicknessMm,volumeMm3\n");
        for s in series {
            for (t, v) in &s.entries {
                writeln!(out, "{},{t},{v}", s.case_id).expect("string write");
            }
        }
        write_atomic(&self.path("volumes.csv"), out.as_bytes())
    }

    /// Volume series in file order.
    pub fn read_volumes(&self) -> Result<Vec<VolumeSeries>> {
        let path = self.path("volumes.csv");
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let bad = |line: usize| Error::Store(format!("corrupt file {}: line {line}", path.display()));
        let mut out: Vec<VolumeSeries> = Vec::new();
        for (i, line) in text.lines().enumerate().skip(1) {
            let parts: Vec<&str> = line.split(',').collect();
            let [case, t, v] = parts[..] else {
                return Err(bad(i + 1));
            };
            let t: f64 = t.parse().map_err(|_| bad(i + 1))?;
            let v: f64 = v.parse().map_err(|_| bad(i + 1))?;
            match out.last_mut() {
                Some(s) if s.case_id == case => s.entries.push((t, v)),
                _ => out.push(VolumeSeries {
                    case_id: case.to_string(),
                    entries: vec![(t, v)],
                }),
            }
        }
        Ok(out)
    }

    pub fn write_cells(&self, map: &CompatibilityMap) -> Result<()> {
        write_atomic(&self.path("cells.json"), &to_json(map))
    }

    pub fn read_cells(&self) -> Result<Option<CompatibilityMap>> {
        self.read_json(&self.path("cells.json"))
    }

    /// (case, condition label) pairs without a stored sample.
    pub fn missing_samples(&self, config: &StoreConfig) -> Result<Vec<(String, String)>> {
        let conditions = config.conditions()?;
        let mut out = Vec::new();
        for case in &config.case_ids {
            for c in &conditions {
                if !self.sample_path(case, c).is_file() {
                    out.push((case.clone(), c.label()));
                }
            }
        }
        Ok(out)
    }

    /// Config of a store whose every (case, condition) sample is present.
    pub fn require_complete(&self) -> Result<StoreConfig> {
        let config = self
            .read_config()?
            .ok_or_else(|| Error::Store(format!("{} is not a results store", self.root.display())))?;
        let missing = self.missing_samples(&config)?;
        if !missing.is_empty() {
            let list: Vec<String> = missing.iter().map(|(c, l)| format!("{c} {l}")).collect();
            return Err(Error::Store(format!(
                "incomplete store, {} missing samples:\n  {}",
                missing.len(),
                list.join("\n  ")
            )));
        }
        Ok(config)
    }

    /// All stored samples as a table; every sample must be present.
    pub fn load_table(&self) -> Result<(StoreConfig, SampleTable)> {
        let config = self.require_complete()?;
        let conditions = config.conditions()?;
        let pairs: Vec<(&String, &ReconCondition)> = config
            .case_ids
            .iter()
            .flat_map(|case| conditions.iter().map(move |c| (case, c)))
            .collect();
        let samples: Vec<FeatureSample> = pairs
            .par_iter()
            .map(|(case, c)| {
                self.read_sample(case, c)?
                    .ok_or_else(|| Error::Store(format!("missing sample {case} {}", c.label())))
            })
            .collect::<Result<_>>()?;
        let table = SampleTable::from_samples(&conditions, &config.case_ids, &samples)?;
        Ok((config, table))
    }

    fn clear_results(&self) -> Result<()> {
        let samples = self.path("samples");
        if samples.exists() {
            fs::remove_dir_all(&samples).map_err(|e| Error::io(&samples, e))?;
        }
        for name in ["cells.json", "index.json", "volumes.csv"] {
            let p = self.path(name);
            if p.exists() {
                fs::remove_file(&p).map_err(|e| Error::io(&p, e))?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Discard any existing results instead of resuming.
    pub force: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunSummary {
    pub computed_series: usize,
    pub skipped_series: usize,
    pub failed_cases: Vec<CaseFailure>,
}

impl RunSummary {
    pub fn is_success(&self) -> bool {
        self.failed_cases.is_empty()
    }
}

/// Execute a manifest into a store on the current rayon pool.
///
/// Resumes an existing store with the same configuration, recomputing only
/// (case, dose, kernel) series with a missing sample. Case failures are
/// logged and reported in the summary; the store is then left incomplete.
pub fn run_study(manifest: &StudyManifest, manifest_path: Option<&Path>, store: &ResultsStore, opts: RunOptions) -> Result<RunSummary> {
    let started = unix_now();
    let config = StoreConfig::from_manifest(manifest);
    config.analysis.validate()?;
    if opts.force {
        store.clear_results()?;
    } else {
        match store.read_config() {
            Ok(Some(old)) if old != config => {
                return Err(Error::Store(format!(
                    "{} holds results for a different configuration; rerun with --force",
                    store.root().display()
                )))
            }
            Ok(_) => {}
            Err(e @ Error::Store(_)) => return Err(Error::Store(format!("{e}; refusing to resume"))),
            Err(e) => return Err(e),
        }
    }
    fs::create_dir_all(store.root()).map_err(|e| Error::io(store.root(), e))?;
    store.write_config(&config)?;

    let conditions = config.conditions()?;
    let thicknesses = manifest.grid.thicknesses_desc();

    let loaded: Vec<std::result::Result<CaseRecord, String>> = manifest
        .cases
        .par_iter()
        .map(|entry| load_case(entry, &manifest.grid).map_err(|e| e.to_string()))
        .collect();
    let mut failures: Vec<Option<String>> = loaded.iter().map(|r| r.as_ref().err().cloned()).collect();
    for (entry, f) in manifest.cases.iter().zip(&failures) {
        if let Some(why) = f {
            log::error!("case {}: {why}", entry.case_id);
        }
    }

    let tasks = series_tasks(manifest.cases.len(), &manifest.grid);
    let computed = AtomicUsize::new(0);
    let skipped = AtomicUsize::new(0);
    let outcomes: Vec<(usize, Result<()>)> = tasks
        .par_iter()
        .filter(|t| loaded[t.case].is_ok())
        .map(|t| {
            let case = loaded[t.case].as_ref().expect("filtered");
            let run = || -> Result<()> {
                let mut complete = true;
                for &th in &thicknesses {
                    let c = ReconCondition::new(t.dose_fraction, t.kernel, th);
                    if store.read_sample(&case.case_id, &c)?.is_none() {
                        complete = false;
                    }
                }
                if complete {
                    skipped.fetch_add(1, AtomicOrdering::Relaxed);
                    return Ok(());
                }
                let samples = extract_series(case, t.dose_fraction, t.kernel, &thicknesses, &config.analysis)?;
                for s in &samples {
                    store.write_sample(s)?;
                }
                computed.fetch_add(1, AtomicOrdering::Relaxed);
                Ok(())
            };
            (t.case, run())
        })
        .collect();
    for (case, r) in outcomes {
        if let Err(e) = r {
            if let Error::Store(_) = e {
                return Err(Error::Store(format!("{e}; refusing to resume (use --force)")));
            }
            if failures[case].is_none() {
                log::error!("case {}: {e}", manifest.cases[case].case_id);
                failures[case] = Some(e.to_string());
            }
        }
    }

    let mut volumes = Vec::new();
    for (i, r) in loaded.iter().enumerate() {
        if let (Ok(case), None) = (r, &failures[i]) {
            match case_volumes(case) {
                Ok(v) => volumes.push(v),
                Err(e) => {
                    log::error!("case {}: {e}", case.case_id);
                    failures[i] = Some(e.to_string());
                }
            }
        }
    }
    store.write_volumes(&volumes)?;

    let failed_cases: Vec<CaseFailure> = manifest
        .cases
        .iter()
        .zip(&failures)
        .filter_map(|(c, f)| {
            f.as_ref().map(|why| CaseFailure {
                case_id: c.case_id.clone(),
                reason: why.clone(),
            })
        })
        .collect();
    let complete = failed_cases.is_empty();
    if complete {
        let (_, table) = store.load_table()?;
        store.write_cells(&build_map(&table, &config.analysis.statistics, Ordering::Canonical))?;
    }
    store.write_index(&StoreIndex {
        complete,
        case_ids: config.case_ids.clone(),
        condition_labels: conditions.iter().map(|c| c.label()).collect(),
        failed_cases: failed_cases.clone(),
    })?;

    let summary = RunSummary {
        computed_series: computed.into_inner(),
        skipped_series: skipped.into_inner(),
        failed_cases,
    };
    let meta = Metadata {
        version: env!("CARGO_PKG_VERSION").to_string(),
        manifest: manifest_path.map(Path::to_path_buf),
        inputs: manifest
            .cases
            .iter()
            .map(|c| (c.case_id.clone(), c.volume_path.clone()))
            .collect(),
        seed: config.analysis.simulator.seed,
        started_unix: started,
        finished_unix: unix_now(),
        computed_series: summary.computed_series,
        skipped_series: summary.skipped_series,
    };
    write_atomic(&store.path("metadata.json"), &to_json(&meta))?;
    Ok(summary)
}
