//! Run-length matrix and its five features.

use super::directions::Connectivity;
use super::quantize::QuantizedRoi;
use super::RLM_FEATURE_COUNT;
use crate::error::{Error, Result};

/// Run counts by gray level (rows, `1..=ng`) and run length (columns,
/// `1..=nr`), accumulated over `directions` directions.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLengthMatrix {
    pub ng: usize,
    pub nr: usize,
    pub directions: usize,
    pub counts: Vec<f64>,
}

impl RunLengthMatrix {
    #[inline]
    pub fn at(&self, level: usize, len: usize) -> f64 {
        self.counts[(level - 1) * self.nr + (len - 1)]
    }

    pub fn total_runs(&self) -> f64 {
        self.counts.iter().sum()
    }

    /// Σ length × count; equals voxel count × direction count.
    pub fn run_mass(&self) -> f64 {
        let mut m = 0.0;
        for i in 1..=self.ng {
            for j in 1..=self.nr {
                m += j as f64 * self.at(i, j);
            }
        }
        m
    }
}

pub fn build_rlm(q: &QuantizedRoi, conn: Connectivity) -> Result<RunLengthMatrix> {
    build_rlm_with(q, conn.directions())
}

/// Maximal equal-level runs along each direction; runs stop at the ROI edge.
pub fn build_rlm_with(q: &QuantizedRoi, directions: &[[isize; 3]]) -> Result<RunLengthMatrix> {
    let d = q.dims;
    let ng = q.ng;
    let nr = d.nx.max(d.ny).max(d.nz);
    let mut counts = vec![0.0; ng * nr];
    let mut any = false;
    for dir in directions {
        let back = [-dir[0], -dir[1], -dir[2]];
        for z in 0..d.nz {
            for y in 0..d.ny {
                for x in 0..d.nx {
                    let level = q.level(d.index(x, y, z));
                    if level == 0 {
                        continue;
                    }
                    // only start runs at their first voxel
                    if let Some(prev) = d.offset(x, y, z, back) {
                        if q.level(prev) == level {
                            continue;
                        }
                    }
                    let mut len = 1;
                    let (mut cx, mut cy, mut cz) = (x, y, z);
                    while let Some(next) = d.offset(cx, cy, cz, *dir) {
                        if q.level(next) != level {
                            break;
                        }
                        len += 1;
                        let (nx, ny, nz) = d.coords(next);
                        cx = nx;
                        cy = ny;
                        cz = nz;
                    }
                    counts[(level as usize - 1) * nr + (len - 1)] += 1.0;
                    any = true;
                }
            }
        }
    }
    if !any {
        return Err(Error::Domain("empty ROI".into()));
    }
    Ok(RunLengthMatrix {
        ng,
        nr,
        directions: directions.len(),
        counts,
    })
}

/// SRE, LRE, GLN, RLN and run percentage (runs per voxel per direction).
pub fn rlm_features(r: &RunLengthMatrix, roi_voxel_count: usize) -> Result<[f64; RLM_FEATURE_COUNT]> {
    let total = r.total_runs();
    if total == 0.0 {
        return Err(Error::Domain("run-length matrix holds no runs".into()));
    }
    let mut sre = 0.0;
    let mut lre = 0.0;
    let mut gln = 0.0;
    let mut col = vec![0.0; r.nr + 1];
    for i in 1..=r.ng {
        let mut row = 0.0;
        for j in 1..=r.nr {
            let c = r.at(i, j);
            if c == 0.0 {
                continue;
            }
            let jf = j as f64;
            sre += c / (jf * jf);
            lre += c * jf * jf;
            row += c;
            col[j] += c;
        }
        gln += row * row;
    }
    let rln: f64 = col.iter().map(|c| c * c).sum();
    let rp = total / (roi_voxel_count as f64 * r.directions as f64);
    Ok([sre / total, lre / total, gln / total, rln / total, rp])
}
