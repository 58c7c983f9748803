#![allow(dead_code)]

pub mod oracle;

use rand::Rng;
use radcompat::features::{quantize_values, roi_features, Connectivity, FEATURE_NAMES};
use radcompat::model::Dims;
use radcompat::Error;

pub struct RandomRoi {
    pub dims: Dims,
    pub values: Vec<f64>,
    pub inside: Vec<bool>,
    pub ng: usize,
    pub planar: bool,
}

/// A random ROI of at most 8x8x8 voxels with 2..=8 gray levels. Planar ROIs
/// are single slices.
pub fn random_roi(rng: &mut impl Rng, planar: bool) -> RandomRoi {
    let nx = rng.random_range(2..=8);
    let ny = rng.random_range(2..=8);
    let nz = if planar { 1 } else { rng.random_range(1..=8) };
    let dims = Dims::new(nx, ny, nz);
    let density: f64 = rng.random_range(0.4..1.0);
    let integer = rng.random_bool(0.5);
    let values = (0..dims.len())
        .map(|_| {
            let v: f64 = rng.random_range(-200.0..200.0);
            if integer {
                v.round()
            } else {
                v
            }
        })
        .collect();
    let inside = (0..dims.len()).map(|_| rng.random_bool(density)).collect();
    RandomRoi {
        dims,
        values,
        inside,
        ng: rng.random_range(2..=8),
        planar,
    }
}

pub fn library_features(r: &RandomRoi) -> radcompat::Result<Vec<f64>> {
    let q = quantize_values(r.dims, &r.values, &r.inside, r.ng)?;
    let raw: Vec<f64> = r.values.iter().zip(&r.inside).filter(|p| *p.1).map(|p| *p.0).collect();
    let conn = if r.planar { Connectivity::Planar } else { Connectivity::Volumetric };
    Ok(roi_features(&raw, &q, conn)?.0.to_vec())
}

/// Draw ROIs until one is non-degenerate for the library.
pub fn usable_roi(rng: &mut impl Rng, planar: bool) -> (RandomRoi, Vec<f64>) {
    loop {
        let r = random_roi(rng, planar);
        match library_features(&r) {
            Ok(f) => return (r, f),
            Err(Error::Degenerate(_)) | Err(Error::Domain(_)) => continue,
            Err(e) => panic!("unexpected error: {e}"),
        }
    }
}

/// Names of features where library and oracle disagree beyond `rel`.
pub fn oracle_mismatches(r: &RandomRoi, lib: &[f64], rel: f64) -> Vec<String> {
    let d = r.dims;
    let roi = oracle::make_roi((d.nx, d.ny, d.nz), &r.values, &r.inside, r.ng);
    let want = oracle::features(&roi, r.planar);
    (0..lib.len())
        .filter(|&f| !oracle::close(lib[f], want[f], rel))
        .map(|f| format!("{} lib={} oracle={}", FEATURE_NAMES[f], lib[f], want[f]))
        .collect()
}
