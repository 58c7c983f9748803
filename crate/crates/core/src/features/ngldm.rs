//! Neighbouring gray-level dependence matrix.

use super::directions::Connectivity;
use super::quantize::QuantizedRoi;
use crate::error::{Error, Result};

/// `Q(k, s)`: voxels of level `k` with `s` dependent neighbours (0-based `s`).
#[derive(Debug, Clone, PartialEq)]
pub struct Ngldm {
    pub ng: usize,
    /// Columns `0..=max_dependence`.
    pub max_dependence: usize,
    pub counts: Vec<f64>,
}

impl Ngldm {
    #[inline]
    pub fn at(&self, level: usize, s: usize) -> f64 {
        self.counts[(level - 1) * (self.max_dependence + 1) + s]
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }
}

/// Dependence: in-ROI neighbours whose level differs by at most `alpha`.
pub fn build_ngldm(q: &QuantizedRoi, conn: Connectivity, alpha: u16) -> Ngldm {
    let neighbours = conn.neighbours();
    let d = q.dims;
    let width = neighbours.len() + 1;
    let mut counts = vec![0.0; q.ng * width];
    for z in 0..d.nz {
        for y in 0..d.ny {
            for x in 0..d.nx {
                let k = q.level(d.index(x, y, z));
                if k == 0 {
                    continue;
                }
                let s = neighbours
                    .iter()
                    .filter_map(|off| d.offset(x, y, z, *off))
                    .filter(|&nb| {
                        let l = q.level(nb);
                        l != 0 && l.abs_diff(k) <= alpha
                    })
                    .count();
                counts[(k as usize - 1) * width + s] += 1.0;
            }
        }
    }
    Ngldm {
        ng: q.ng,
        max_dependence: neighbours.len(),
        counts,
    }
}

/// Small and large number emphasis with `(s + 1)` weights.
pub fn ngldm_features(q: &Ngldm) -> Result<[f64; 2]> {
    let total = q.total();
    if total == 0.0 {
        return Err(Error::Domain("empty dependence matrix".into()));
    }
    let mut sne = 0.0;
    let mut lne = 0.0;
    for k in 1..=q.ng {
        for s in 0..=q.max_dependence {
            let c = q.at(k, s);
            if c == 0.0 {
                continue;
            }
            let w = ((s + 1) * (s + 1)) as f64;
            sne += c / w;
            lne += c * w;
        }
    }
    Ok([sne / total, lne / total])
}
