//! Neighbourhood gray-tone difference matrix: coarseness, complexity, strength.

use super::directions::Connectivity;
use super::quantize::QuantizedRoi;
use crate::error::{Error, Result};

pub const NGTDM_EPS: f64 = 1e-12;
pub const COARSENESS_CAP: f64 = 1e6;

/// Per-level occurrence probability `p[i]` and difference sum `s[i]`, indexed
/// by level `1..=ng` (index 0 unused). Only voxels with at least one in-ROI
/// neighbour contribute; `n` counts them.
#[derive(Debug, Clone, PartialEq)]
pub struct Ngtdm {
    pub ng: usize,
    pub p: Vec<f64>,
    pub s: Vec<f64>,
    pub n: usize,
}

pub fn build_ngtdm(q: &QuantizedRoi, conn: Connectivity) -> Result<Ngtdm> {
    let neighbours = conn.neighbours();
    let d = q.dims;
    let ng = q.ng;
    let mut counts = vec![0usize; ng + 1];
    let mut s = vec![0.0; ng + 1];
    for z in 0..d.nz {
        for y in 0..d.ny {
            for x in 0..d.nx {
                let level = q.level(d.index(x, y, z));
                if level == 0 {
                    continue;
                }
                let mut sum = 0u32;
                let mut cnt = 0u32;
                for off in &neighbours {
                    if let Some(nb) = d.offset(x, y, z, *off) {
                        let l = q.level(nb);
                        if l != 0 {
                            sum += l as u32;
                            cnt += 1;
                        }
                    }
                }
                if cnt == 0 {
                    continue;
                }
                let avg = sum as f64 / cnt as f64;
                s[level as usize] += (level as f64 - avg).abs();
                counts[level as usize] += 1;
            }
        }
    }
    let n: usize = counts.iter().sum();
    if n == 0 {
        return Err(Error::Degenerate("no ROI voxel has an in-ROI neighbour".into()));
    }
    let p = counts.iter().map(|&c| c as f64 / n as f64).collect();
    Ok(Ngtdm { ng, p, s, n })
}

/// Coarseness, complexity (absolute level difference) and texture strength.
pub fn ngtdm_features(m: &Ngtdm) -> [f64; 3] {
    let levels: Vec<usize> = (1..=m.ng).filter(|&i| m.p[i] > 0.0).collect();
    let weighted: f64 = levels.iter().map(|&i| m.p[i] * m.s[i]).sum();
    let coarseness = (1.0 / (NGTDM_EPS + weighted)).min(COARSENESS_CAP);

    let n2 = (m.n * m.n) as f64;
    let mut complexity = 0.0;
    let mut strength_num = 0.0;
    for &i in &levels {
        for &j in &levels {
            let diff = i.abs_diff(j) as f64;
            let (pi, pj) = (m.p[i], m.p[j]);
            complexity += diff / (n2 * (pi + pj)) * (pi * m.s[i] + pj * m.s[j]);
            strength_num += (pi + pj) * diff * diff;
        }
    }
    let s_total: f64 = levels.iter().map(|&i| m.s[i]).sum();
    let strength = strength_num / (NGTDM_EPS + s_total);
    [coarseness, complexity, strength]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Dims;

    #[test]
    fn constant_roi() {
        let q = QuantizedRoi::from_levels(Dims::new(3, 3, 1), vec![2; 9], 4).unwrap();
        let m = build_ngtdm(&q, Connectivity::Planar).unwrap();
        assert!(m.s.iter().all(|&v| v == 0.0));
        assert_eq!(ngtdm_features(&m), [COARSENESS_CAP, 0.0, 0.0]);
    }

    #[test]
    fn row_121() {
        let q = QuantizedRoi::from_levels(Dims::new(1, 3, 1), vec![1, 2, 1], 2).unwrap();
        let m = build_ngtdm(&q, Connectivity::Volumetric).unwrap();
        // centre: level 2, neighbour mean 1; ends: level 1, neighbour mean 2
        assert_eq!(m.s[2], 1.0);
        assert_eq!(m.s[1], 2.0);
        assert_eq!(m.n, 3);
        assert!((m.p[1] + m.p[2] - 1.0).abs() < 1e-15);
        let f = ngtdm_features(&m);
        let weighted = 2.0 / 3.0 * 2.0 + 1.0 / 3.0 * 1.0;
        assert!((f[0] - 1.0 / (weighted + NGTDM_EPS)).abs() < 1e-12);
    }

    #[test]
    fn coarseness_drops_when_differences_double() {
        let q = QuantizedRoi::from_levels(Dims::new(4, 1, 1), vec![1, 3, 2, 3], 3).unwrap();
        let m = build_ngtdm(&q, Connectivity::Planar).unwrap();
        let mut doubled = m.clone();
        doubled.s.iter_mut().for_each(|v| *v *= 2.0);
        assert!(ngtdm_features(&doubled)[0] < ngtdm_features(&m)[0]);
    }

    #[test]
    fn isolated_voxels_are_degenerate() {
        let q = QuantizedRoi::from_levels(Dims::new(3, 1, 1), vec![1, 0, 2], 2).unwrap();
        assert!(build_ngtdm(&q, Connectivity::Planar).is_err());
    }
}
