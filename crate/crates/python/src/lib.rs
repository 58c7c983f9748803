//! Python bindings. Configuration objects cross the boundary as JSON text
//! using the same camelCase schema as study manifests.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use radcompat::compat::{build_map, marginal_matrix, Axis, CompatibilityMap, Ordering};
use radcompat::features::{extract_feature_sample, FeatureSample, FEATURE_NAMES};
use radcompat::manifest::AnalysisConfig;
use radcompat::model::{
    enumerate_conditions, CaseRecord, ConditionGridConfig, Dims, Kernel, ReconCondition, RoiMask, ScalarVolume,
    Spacing, KERNEL_NAMES,
};
use radcompat::phantom::{generate_cohort, CohortJitter, PhantomSpec};
use radcompat::sim::reconstruct;
use radcompat::study::{analyze_cases, case_volumes};
use radcompat::volumetry;
use radcompat::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::Invalid { .. } | Error::Manifest { .. } | Error::Domain(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn from_json<T: serde::de::DeserializeOwned + Default>(text: Option<&str>, what: &str) -> PyResult<T> {
    match text {
        None => Ok(T::default()),
        Some(t) => serde_json::from_str(t).map_err(|e| PyValueError::new_err(format!("{what}: {e}"))),
    }
}

fn grid_from(text: Option<&str>) -> PyResult<ConditionGridConfig> {
    let grid: ConditionGridConfig = from_json(text, "grid")?;
    grid.validate().map_err(py_err)?;
    Ok(grid)
}

fn analysis_from(text: Option<&str>) -> PyResult<AnalysisConfig> {
    let a: AnalysisConfig = from_json(text, "analysis")?;
    a.validate().map_err(py_err)?;
    Ok(a)
}

/// A case: base image plus one reference mask per slice thickness.
#[pyclass(name = "Case", frozen)]
struct PyCase {
    inner: CaseRecord,
}

#[pymethods]
impl PyCase {
    /// Build a case from flat x-fastest arrays; masks for each thickness are
    /// resampled from `mask`.
    #[new]
    #[pyo3(signature = (case_id, voxels, mask, dims, spacing, thicknesses_mm=None))]
    fn new(
        case_id: String,
        voxels: Vec<f64>,
        mask: Vec<bool>,
        dims: (usize, usize, usize),
        spacing: (f64, f64, f64),
        thicknesses_mm: Option<Vec<f64>>,
    ) -> PyResult<Self> {
        let d = Dims::new(dims.0, dims.1, dims.2);
        let volume = ScalarVolume::new(d, Spacing::new(spacing.0, spacing.1, spacing.2), voxels).map_err(py_err)?;
        let mask = RoiMask::new(d, mask).map_err(py_err)?;
        let t = thicknesses_mm.unwrap_or_else(|| ConditionGridConfig::default().thicknesses_mm);
        let inner = CaseRecord::from_base_mask(case_id, volume, &mask, &t).map_err(py_err)?;
        Ok(PyCase { inner })
    }

    #[getter]
    fn case_id(&self) -> &str {
        &self.inner.case_id
    }

    #[getter]
    fn dims(&self) -> (usize, usize, usize) {
        let d = self.inner.base_volume.dims();
        (d.nx, d.ny, d.nz)
    }

    #[getter]
    fn spacing(&self) -> (f64, f64, f64) {
        let s = self.inner.base_volume.spacing();
        (s.sx, s.sy, s.sz)
    }

    #[getter]
    fn thicknesses_mm(&self) -> Vec<f64> {
        self.inner.masks().iter().map(|(t, _)| *t).collect()
    }

    fn voxels(&self) -> Vec<f64> {
        self.inner.base_volume.voxels().to_vec()
    }

    /// Reference-mask volume in mm3 per thickness, thickest first.
    fn volumes(&self) -> PyResult<Vec<(f64, f64)>> {
        Ok(case_volumes(&self.inner).map_err(py_err)?.entries)
    }

    /// Simulated reconstruction as a flat array with dims `(nx, ny, nz_t)`.
    #[pyo3(signature = (dose_fraction, kernel, thickness_mm, simulator=None))]
    fn reconstruct(
        &self,
        py: Python<'_>,
        dose_fraction: f64,
        kernel: &str,
        thickness_mm: f64,
        simulator: Option<&str>,
    ) -> PyResult<(Vec<f64>, (usize, usize, usize))> {
        let cfg = from_json(simulator, "simulator")?;
        let c = ReconCondition::new(dose_fraction, Kernel::from_name(kernel).map_err(py_err)?, thickness_mm);
        let img = py.detach(|| reconstruct(&self.inner, &c, &cfg)).map_err(py_err)?;
        let d = img.dims();
        Ok((img.into_voxels(), (d.nx, d.ny, d.nz)))
    }

    /// Feature sample of this case under one reconstruction condition.
    #[pyo3(signature = (dose_fraction, kernel, thickness_mm, analysis=None))]
    fn features(
        &self,
        py: Python<'_>,
        dose_fraction: f64,
        kernel: &str,
        thickness_mm: f64,
        analysis: Option<&str>,
    ) -> PyResult<Sample> {
        let analysis = analysis_from(analysis)?;
        let c = ReconCondition::new(dose_fraction, Kernel::from_name(kernel).map_err(py_err)?, thickness_mm);
        let mask = self
            .inner
            .mask_for(thickness_mm)
            .ok_or_else(|| PyValueError::new_err(format!("case has no mask for {thickness_mm} mm")))?;
        let sample = py
            .detach(|| {
                let img = reconstruct(&self.inner, &c, &analysis.simulator)?;
                extract_feature_sample(&img, mask, &analysis.features, &self.inner.case_id, c)
            })
            .map_err(py_err)?;
        Ok(Sample { inner: sample })
    }

    fn __repr__(&self) -> String {
        let (nx, ny, nz) = self.dims();
        format!("Case({:?}, dims=({nx}, {ny}, {nz}))", self.inner.case_id)
    }
}

/// Per-slice feature vectors of one case under one condition.
#[pyclass(frozen)]
struct Sample {
    inner: FeatureSample,
}

#[pymethods]
impl Sample {
    #[getter]
    fn case_id(&self) -> &str {
        &self.inner.case_id
    }

    #[getter]
    fn label(&self) -> String {
        self.inner.condition.label()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn usable(&self) -> bool {
        self.inner.usable
    }

    #[getter]
    fn slice_indices(&self) -> Vec<usize> {
        self.inner.slice_indices.clone()
    }

    #[getter]
    fn mean(&self) -> Vec<f64> {
        self.inner.mean.0.to_vec()
    }

    #[getter]
    fn sd(&self) -> Vec<f64> {
        self.inner.sd.0.to_vec()
    }

    #[getter]
    fn per_slice(&self) -> Vec<Vec<f64>> {
        self.inner.per_slice.iter().map(|v| v.0.to_vec()).collect()
    }
}

/// Pairwise compatibility ratios between every pair of conditions.
#[pyclass(name = "CompatibilityMap", frozen)]
struct PyMap {
    inner: CompatibilityMap,
}

#[pymethods]
impl PyMap {
    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn labels(&self) -> Vec<String> {
        self.inner.labels()
    }

    /// Row-major ratio matrix in percent; `None` where no pair was usable.
    fn ratios(&self) -> Vec<Vec<Option<f64>>> {
        self.inner.ratio_matrix().values
    }

    fn ratio(&self, i: usize, j: usize) -> PyResult<Option<f64>> {
        if i >= self.inner.len() || j >= self.inner.len() {
            return Err(PyValueError::new_err("index out of range"));
        }
        Ok(self.inner.ratio(i, j))
    }

    fn comparison_count(&self) -> u64 {
        self.inner.comparison_count()
    }

    fn is_symmetric(&self) -> bool {
        self.inner.is_symmetric()
    }

    /// Same map with rows sorted by "canonical" or "total" compatibility.
    fn reordered(&self, ordering: &str) -> PyResult<PyMap> {
        Ok(PyMap {
            inner: self.inner.reordered(parse_ordering(ordering)?),
        })
    }

    /// Average ratios between values of one axis ("dose", "kernel" or
    /// "thickness") with the other two held fixed.
    fn marginal(&self, axis: &str) -> PyResult<(Vec<String>, Vec<Vec<Option<f64>>>)> {
        let axis: Axis = axis.parse().map_err(py_err)?;
        let m = marginal_matrix(axis, &self.inner).map_err(py_err)?;
        Ok((m.labels, m.values))
    }
}

fn parse_ordering(s: &str) -> PyResult<Ordering> {
    match s {
        "canonical" => Ok(Ordering::Canonical),
        "total" => Ok(Ordering::ByTotalCompatibility),
        other => Err(PyValueError::new_err(format!("unknown ordering {other:?}"))),
    }
}

/// Synthetic nodule cohort; `spec` and `jitter` are JSON objects.
#[pyfunction]
#[pyo3(signature = (n, seed=0, thicknesses_mm=None, spec=None, jitter=None))]
fn phantom_cohort(
    py: Python<'_>,
    n: usize,
    seed: u64,
    thicknesses_mm: Option<Vec<f64>>,
    spec: Option<&str>,
    jitter: Option<&str>,
) -> PyResult<Vec<PyCase>> {
    let spec: PhantomSpec = from_json(spec, "spec")?;
    let jitter = match jitter {
        None => CohortJitter::standard(),
        Some(_) => from_json(jitter, "jitter")?,
    };
    let t = thicknesses_mm.unwrap_or_else(|| ConditionGridConfig::default().thicknesses_mm);
    let cases = py
        .detach(|| generate_cohort(n, &spec, &jitter, seed, &t))
        .map_err(py_err)?;
    Ok(cases.into_iter().map(|inner| PyCase { inner }).collect())
}

/// Condition labels of a grid in canonical order.
#[pyfunction]
#[pyo3(signature = (grid=None))]
fn conditions(grid: Option<&str>) -> PyResult<Vec<String>> {
    let grid = grid_from(grid)?;
    Ok(enumerate_conditions(&grid)
        .map_err(py_err)?
        .iter()
        .map(ReconCondition::label)
        .collect())
}

/// Welch-type statistic |m1 - m2| / sqrt(s1^2/n1 + s2^2/n2).
#[pyfunction]
fn t_statistic(m1: f64, s1: f64, n1: usize, m2: f64, s2: f64, n2: usize) -> PyResult<f64> {
    volumetry::t_statistic(m1, s1, n1, m2, s2, n2).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (t, threshold=volumetry::DEFAULT_T_THRESHOLD))]
fn is_compatible(t: f64, threshold: f64) -> bool {
    t < threshold
}

/// Run every condition of the grid over `cases` and build the map.
#[pyfunction]
#[pyo3(signature = (cases, grid=None, analysis=None, ordering="canonical"))]
fn analyze(
    py: Python<'_>,
    cases: Vec<PyRef<'_, PyCase>>,
    grid: Option<&str>,
    analysis: Option<&str>,
    ordering: &str,
) -> PyResult<PyMap> {
    let grid = grid_from(grid)?;
    let analysis = analysis_from(analysis)?;
    let ordering = parse_ordering(ordering)?;
    let records: Vec<CaseRecord> = cases.iter().map(|c| c.inner.clone()).collect();
    let map = py
        .detach(|| {
            let r = analyze_cases(&records, &grid, &analysis)?;
            Ok(build_map(&r.table()?, &analysis.statistics, ordering))
        })
        .map_err(py_err)?;
    Ok(PyMap { inner: map })
}

#[pymodule]
fn pyradcompat(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("FEATURE_NAMES", FEATURE_NAMES.to_vec())?;
    m.add("KERNEL_NAMES", KERNEL_NAMES.to_vec())?;
    m.add_class::<PyCase>()?;
    m.add_class::<Sample>()?;
    m.add_class::<PyMap>()?;
    m.add_function(wrap_pyfunction!(phantom_cohort, m)?)?;
    m.add_function(wrap_pyfunction!(conditions, m)?)?;
    m.add_function(wrap_pyfunction!(t_statistic, m)?)?;
    m.add_function(wrap_pyfunction!(is_compatible, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    Ok(())
}
