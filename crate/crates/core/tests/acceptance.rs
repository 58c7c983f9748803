//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any fails.

mod support;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use radcompat::compat::{build_map, marginal_matrix, Axis, CompatibilityMap, Ordering, SampleTable};
use radcompat::features::FEATURE_COUNT;
use radcompat::manifest::{load_manifest, write_phantom_study, AnalysisConfig};
use radcompat::model::{ConditionGridConfig, Dims, Kernel, ScalarVolume, Spacing};
use radcompat::nrrd::{read_volume, write_volume, write_volume_as, NrrdType};
use radcompat::phantom::{generate_cohort, generate_cohort_phantoms, CohortJitter, PhantomSpec};
use radcompat::report::{render_report, ReportFormat, ReportKind};
use radcompat::store::{run_study, ResultsStore, RunOptions};
use radcompat::study::{analyze_cases, StudyResults};
use radcompat::volumetry::{
    is_compatible, measure_volume, normalize_series, t_statistic, volume_trend_report, StatisticsConfig,
    VolumeSeries,
};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

const TREND_SEEDS: [u64; 3] = [1, 2, 3];
const TREND_COHORT: usize = 23;

fn analysis(seed: u64) -> AnalysisConfig {
    let mut a = AnalysisConfig::default();
    a.simulator.seed = seed;
    a
}

/// Full-grid studies of the 23-case textured cohort, one per seed.
fn trend_studies() -> &'static Vec<(u64, StudyResults, CompatibilityMap)> {
    static CELL: OnceLock<Vec<(u64, StudyResults, CompatibilityMap)>> = OnceLock::new();
    CELL.get_or_init(|| {
        let grid = ConditionGridConfig::default();
        TREND_SEEDS
            .iter()
            .map(|&seed| {
                let cases = generate_cohort(
                    TREND_COHORT,
                    &PhantomSpec::default(),
                    &CohortJitter::standard(),
                    seed,
                    &grid.thicknesses_mm,
                )
                .expect("cohort");
                let a = analysis(seed);
                let r = analyze_cases(&cases, &grid, &a).expect("study");
                let map = r.map(&a, Ordering::Canonical).expect("map");
                (seed, r, map)
            })
            .collect()
    })
}

fn small_spec() -> PhantomSpec {
    let mut spec = PhantomSpec::default();
    spec.dims = Dims::new(40, 40, 120);
    spec.base_spacing = Spacing::new(0.6, 0.6, 0.2);
    spec.center_mm[2] = 12.0;
    spec
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0usize;
    for i in 0..50 {
        let (roi, lib) = support::usable_roi(&mut rng, i % 5 == 4);
        let bad = support::oracle_mismatches(&roi, &lib, 1e-9);
        ensure!(bad.is_empty(), "roi {i} ({}): {bad:?}", roi.dims);
        worst = worst.max(roi.dims.len());
    }
    let took = start.elapsed();
    ensure!(took < Duration::from_secs(10), "took {took:?}");
    Ok(format!("50 ROIs x {FEATURE_COUNT} features within 1e-9, largest box {worst} voxels, {took:.2?}"))
}

fn criterion_2() -> Outcome {
    // (m1, s1, n1, m2, s2, n2, expected t)
    let cases: [(f64, f64, usize, f64, f64, usize, f64); 5] = [
        (0.0, 1.0, 23, 1.0, 1.0, 23, (23.0f64 / 2.0).sqrt()),
        (10.0, 2.0, 4, 12.0, 2.0, 4, 2.0f64.sqrt()),
        (5.0, 3.0, 9, 1.0, 4.0, 16, 4.0 / 2.0f64.sqrt()),
        (3.0, 0.0, 5, 3.0, 0.0, 5, 0.0),
        (1.0, 0.0, 2, 2.0, 0.0, 2, f64::INFINITY),
    ];
    for (m1, s1, n1, m2, s2, n2, want) in cases {
        let t = t_statistic(m1, s1, n1, m2, s2, n2).map_err(|e| e.to_string())?;
        let ok = if want.is_infinite() { t == want } else { (t - want).abs() <= 1e-12 * want.max(1.0) };
        ensure!(ok, "t({m1},{s1},{n1},{m2},{s2},{n2}) = {t}, want {want}");
    }
    ensure!(
        (t_statistic(0.0, 1.0, 23, 1.0, 1.0, 23).unwrap() - 3.391164991562634).abs() < 1e-12,
        "n=23 example"
    );
    ensure!(!is_compatible(1.96), "t = 1.96 must be incompatible");
    ensure!(is_compatible(1.96 - 1e-12), "t just below 1.96 must be compatible");
    ensure!(!StatisticsConfig::default().is_compatible(1.96), "config threshold not strict");

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let k = rng.random_range(2..=8);
        let s = VolumeSeries {
            case_id: format!("s{i}"),
            entries: (0..k).map(|j| (j as f64 + 1.0, rng.random_range(1e-2..1e4))).collect(),
        };
        let n = normalize_series(&s).map_err(|e| e.to_string())?;
        let mean = n.entries.iter().map(|e| e.1).sum::<f64>() / k as f64;
        worst = worst.max((mean - 1.0).abs());
    }
    ensure!(worst <= 1e-12, "normalised mean off by {worst}");
    Ok(format!("5 t vectors to 1e-12, strict 1.96 threshold, 1000 series max |mean-1| = {worst:.1e}"))
}

fn criterion_3() -> Outcome {
    let grid = ConditionGridConfig {
        doses: vec![1.0, 0.25],
        kernels: vec![Kernel::new(0).unwrap(), Kernel::new(5).unwrap(), Kernel::new(9).unwrap()],
        thicknesses_mm: vec![1.0, 3.0],
    };
    let a = analysis(5);
    let cases = generate_cohort(3, &small_spec(), &CohortJitter::standard(), 5, &grid.thicknesses_mm)
        .map_err(|e| e.to_string())?;
    let r = analyze_cases(&cases, &grid, &a).map_err(|e| e.to_string())?;
    let map = r.map(&a, Ordering::Canonical).map_err(|e| e.to_string())?;
    ensure!(map.len() == 12, "expected 12 conditions, got {}", map.len());
    ensure!(map.is_symmetric(), "map not symmetric");
    for i in 0..map.len() {
        ensure!(map.ratio(i, i) == Some(100.0), "diagonal {i} = {:?}", map.ratio(i, i));
    }
    let rev_ids: Vec<String> = r.case_ids.iter().rev().cloned().collect();
    let rev_samples: Vec<_> = r.samples.iter().rev().cloned().collect();
    let rev = SampleTable::from_samples(&r.conditions, &rev_ids, &rev_samples).map_err(|e| e.to_string())?;
    ensure!(build_map(&rev, &a.statistics, Ordering::Canonical) == map, "map depends on case order");

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let full = ConditionGridConfig::default();
    let phantoms = generate_cohort_phantoms(5, &PhantomSpec::default(), &CohortJitter::standard(), 11)
        .map_err(|e| e.to_string())?;
    let manifest_path = write_phantom_study(&dir.path().join("in"), "full", &phantoms, &full, &analysis(11))
        .map_err(|e| e.to_string())?;
    let manifest = load_manifest(&manifest_path).map_err(|e| e.to_string())?;
    let store = ResultsStore::new(dir.path().join("store"));
    let pool = rayon::ThreadPoolBuilder::new().num_threads(8).build().map_err(|e| e.to_string())?;
    let start = Instant::now();
    let summary = pool
        .install(|| run_study(&manifest, Some(&manifest_path), &store, RunOptions::default()))
        .map_err(|e| e.to_string())?;
    let took = start.elapsed();
    ensure!(summary.is_success(), "failures: {:?}", summary.failed_cases);
    let cells = store.read_cells().map_err(|e| e.to_string())?.ok_or("no cells written")?;
    ensure!(cells.len() == 320, "full map has {} conditions", cells.len());
    ensure!(took < Duration::from_secs(600), "full study took {took:?}");
    Ok(format!(
        "12x12 map symmetric, diagonal 100, case-order invariant; 5 x 320 study on 8 threads in {took:.1?}"
    ))
}

fn criterion_4() -> Outcome {
    let mut rows = Vec::new();
    for (seed, _, map) in trend_studies() {
        let m = marginal_matrix(Axis::Dose, map).map_err(|e| e.to_string())?;
        ensure!(m.labels == ["100", "50", "25", "12.5"], "dose labels {:?}", m.labels);
        let row: Vec<f64> = m.values[0][1..].iter().map(|v| v.unwrap_or(f64::NAN)).collect();
        ensure!(row[0] > row[1] && row[1] > row[2], "seed {seed}: 100% row {row:?} not strictly decreasing");
        rows.push(format!("seed {seed}: {:.2} > {:.2} > {:.2}", row[0], row[1], row[2]));
    }
    Ok(rows.join("; "))
}

fn criterion_5() -> Outcome {
    let mut parts = Vec::new();
    for (seed, r, _) in trend_studies() {
        let norm = r
            .volumes
            .iter()
            .map(normalize_series)
            .collect::<radcompat::Result<Vec<_>>>()
            .map_err(|e| e.to_string())?;
        let trend = volume_trend_report(&norm).map_err(|e| e.to_string())?;
        let sd_at = |t: f64| trend.iter().find(|row| row.thickness_mm == t).map(|row| row.sd_percent);
        let (sd5, sd1) = (sd_at(5.0).ok_or("no 5 mm row")?, sd_at(1.0).ok_or("no 1 mm row")?);
        ensure!(sd5 > sd1, "seed {seed}: SD at 5 mm {sd5:.2} <= SD at 1 mm {sd1:.2}");
        parts.push(format!("seed {seed}: SD5 {sd5:.2}% > SD1 {sd1:.2}%"));
    }
    let spec = PhantomSpec::centered_sphere(5.0, 0.5, 28);
    let (_, mask) = radcompat::phantom::generate_phantom(&spec).map_err(|e| e.to_string())?;
    let v = measure_volume(&mask, spec.base_spacing).map_err(|e| e.to_string())?;
    let rel = (v - 523.6).abs() / 523.6;
    ensure!(rel < 0.02, "sphere volume {v} off by {:.2}%", rel * 100.0);
    parts.push(format!("r=5 mm sphere {v:.1} mm3 ({:.2}% off)", rel * 100.0));
    Ok(parts.join("; "))
}

fn criterion_6() -> Outcome {
    let mut parts = Vec::new();
    for (seed, _, map) in trend_studies() {
        let m = marginal_matrix(Axis::Thickness, map).map_err(|e| e.to_string())?;
        let pos = |l: &str| m.labels.iter().position(|x| x == l).ok_or(format!("no {l} label"));
        let thick = m.values[pos("5.00")?][pos("4.00")?].ok_or("undefined (5, 4)")?;
        let thin = m.values[pos("0.75")?][pos("0.60")?].ok_or("undefined (0.75, 0.6)")?;
        ensure!(thick > thin, "seed {seed}: (5,4) {thick:.2} <= (0.75,0.6) {thin:.2}");
        parts.push(format!("seed {seed}: {thick:.2} > {thin:.2}"));
    }
    Ok(parts.join("; "))
}

fn store_files(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().unwrap() != "metadata.json" {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn criterion_7() -> Outcome {
    let grid = ConditionGridConfig {
        doses: vec![1.0, 0.5],
        kernels: vec![Kernel::new(2).unwrap(), Kernel::new(8).unwrap()],
        thicknesses_mm: vec![0.6, 2.0, 5.0],
    };
    let kinds = [
        ReportKind::Map,
        ReportKind::Kernel,
        ReportKind::Thickness,
        ReportKind::Dose,
        ReportKind::Volumes,
        ReportKind::Features,
    ];
    let formats = [ReportFormat::Csv, ReportFormat::Ppm, ReportFormat::Json];
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let phantoms = generate_cohort_phantoms(3, &small_spec(), &CohortJitter::standard(), 9)
        .map_err(|e| e.to_string())?;
    let manifest_path = write_phantom_study(&dir.path().join("in"), "det", &phantoms, &grid, &analysis(9))
        .map_err(|e| e.to_string())?;
    let manifest = load_manifest(&manifest_path).map_err(|e| e.to_string())?;
    let mut snapshots = Vec::new();
    for run in ["a", "b"] {
        let store = ResultsStore::new(dir.path().join(run));
        run_study(&manifest, Some(&manifest_path), &store, RunOptions::default()).map_err(|e| e.to_string())?;
        let mut files = store_files(store.root());
        for k in kinds {
            for f in formats {
                let bytes = render_report(&store, k, f, Ordering::Canonical).map_err(|e| e.to_string())?;
                files.insert(format!("report {k:?} {f:?}"), bytes);
            }
        }
        snapshots.push(files);
    }
    ensure!(snapshots[0].len() > 20, "store unexpectedly small");
    for (name, bytes) in &snapshots[0] {
        ensure!(snapshots[1].get(name) == Some(bytes), "{name} differs between runs");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for i in 0..100 {
        let dims = Dims::new(rng.random_range(1..10), rng.random_range(1..10), rng.random_range(1..10));
        let int = i % 2 == 0;
        let vals = (0..dims.len())
            .map(|_| {
                if int {
                    rng.random_range(-32768..=32767) as f64
                } else {
                    rng.random_range(-3000.0f32..3000.0) as f64
                }
            })
            .collect();
        let sp = Spacing::new(rng.random_range(0.1..2.0), rng.random_range(0.1..2.0), rng.random_range(0.1..5.0));
        let v = ScalarVolume::new(dims, sp, vals).map_err(|e| e.to_string())?;
        let p = dir.path().join(format!("rt{i}.nrrd"));
        if int {
            write_volume_as(&v, &p, NrrdType::Int16).map_err(|e| e.to_string())?;
        } else {
            write_volume(&v, &p).map_err(|e| e.to_string())?;
        }
        ensure!(read_volume(&p).map_err(|e| e.to_string())? == v, "round trip {i} not lossless");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(78);
    let mut checked = 0;
    while checked < 20 {
        let (mut roi, _) = support::usable_roi(&mut rng, checked % 4 == 3);
        roi.values.iter_mut().for_each(|v| *v = v.round());
        let Ok(base) = support::library_features(&roi) else {
            continue;
        };
        let a = rng.random_range(1..=7) as f64;
        let b = rng.random_range(-1000..=1000) as f64;
        roi.values.iter_mut().for_each(|v| *v = a * *v + b);
        let mapped = support::library_features(&roi).map_err(|e| e.to_string())?;
        for f in 5..FEATURE_COUNT {
            ensure!(
                mapped[f].to_bits() == base[f].to_bits(),
                "roi {checked}: feature {f} changed under {a}x + {b}"
            );
        }
        checked += 1;
    }
    Ok(format!(
        "{} store files + 18 reports identical across runs; 100 NRRD round trips; 20 ROIs affine-invariant",
        snapshots[0].len() - 18
    ))
}

fn criterion_8() -> Outcome {
    let grid = ConditionGridConfig {
        doses: vec![1.0, 0.125],
        kernels: vec![Kernel::new(0).unwrap(), Kernel::new(4).unwrap(), Kernel::new(9).unwrap()],
        thicknesses_mm: vec![0.75, 2.0],
    };
    let a = analysis(8);
    let cases = generate_cohort(3, &small_spec(), &CohortJitter::standard(), 8, &grid.thicknesses_mm)
        .map_err(|e| e.to_string())?;
    let r = analyze_cases(&cases, &grid, &a).map_err(|e| e.to_string())?;
    ensure!(r.samples.iter().all(|s| s.usable), "some samples unusable");
    let map = r.map(&a, Ordering::Canonical).map_err(|e| e.to_string())?;
    let (c, f, p) = (map.len() as u64, FEATURE_COUNT as u64, r.case_ids.len() as u64);
    ensure!(c == 12 && p == 3, "C = {c}, P = {p}");
    let usable: u64 = map.cells.iter().map(|x| x.total as u64).sum();
    ensure!(map.comparison_count() == c * c * f * p, "count {} != {}", map.comparison_count(), c * c * f * p);
    ensure!(usable == c * c * f * p, "usable count {usable}");
    Ok(format!("C={c}, F={f}, P={p}: {} comparisons", map.comparison_count()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("feature oracle equivalence", criterion_1),
        ("statistics exactness", criterion_2),
        ("map structure and full-study runtime", criterion_3),
        ("dose trend", criterion_4),
        ("thickness/volume trend", criterion_5),
        ("texture-vs-thickness trend", criterion_6),
        ("determinism and round trips", criterion_7),
        ("comparison-count bookkeeping", criterion_8),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {}: {name} ({secs:.1}s) - {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {}: {name} ({secs:.1}s) - {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
