//! Gray-level co-occurrence matrix and the thirteen Haralick features.

use super::directions::Connectivity;
use super::quantize::QuantizedRoi;
use super::{entropy_term, GLCM_FEATURE_COUNT};
use crate::error::{Error, Result};

/// Symmetric, direction-merged joint probabilities `p(i, j)`, levels `1..=ng`
/// stored at index `(i - 1) * ng + (j - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Glcm {
    pub ng: usize,
    pub p: Vec<f64>,
}

impl Glcm {
    pub fn from_probabilities(ng: usize, p: Vec<f64>) -> Result<Self> {
        if p.len() != ng * ng {
            return Err(Error::Domain(format!("GLCM needs {} cells, got {}", ng * ng, p.len())));
        }
        let sum: f64 = p.iter().sum();
        if p.iter().any(|&v| v < 0.0 || !v.is_finite()) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("GLCM must be nonnegative and sum to 1 (sum {sum})")));
        }
        Ok(Glcm { ng, p })
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.p[(i - 1) * self.ng + (j - 1)]
    }
}

/// Count distance-1 co-occurrences over the direction set, both orderings.
pub fn build_glcm(q: &QuantizedRoi, conn: Connectivity) -> Result<Glcm> {
    build_glcm_with(q, conn.directions())
}

pub fn build_glcm_with(q: &QuantizedRoi, directions: &[[isize; 3]]) -> Result<Glcm> {
    let ng = q.ng;
    let d = q.dims;
    let mut counts = vec![0u64; ng * ng];
    let mut pairs = 0u64;
    for z in 0..d.nz {
        for y in 0..d.ny {
            for x in 0..d.nx {
                let a = q.level(d.index(x, y, z));
                if a == 0 {
                    continue;
                }
                for dir in directions {
                    let Some(nb) = d.offset(x, y, z, *dir) else {
                        continue;
                    };
                    let b = q.level(nb);
                    if b == 0 {
                        continue;
                    }
                    let (a, b) = (a as usize - 1, b as usize - 1);
                    counts[a * ng + b] += 1;
                    counts[b * ng + a] += 1;
                    pairs += 2;
                }
            }
        }
    }
    if pairs == 0 {
        return Err(Error::Degenerate("no in-ROI voxel pairs for GLCM".into()));
    }
    let total = pairs as f64;
    Ok(Glcm {
        ng,
        p: counts.into_iter().map(|c| c as f64 / total).collect(),
    })
}

/// ASM, contrast, correlation, variance, IDM, sum average, sum entropy,
/// sum variance, entropy, difference variance, difference entropy, IMC1, IMC2.
pub fn glcm_features(g: &Glcm) -> [f64; GLCM_FEATURE_COUNT] {
    let ng = g.ng;
    let mut px = vec![0.0; ng + 1];
    let mut py = vec![0.0; ng + 1];
    let mut p_sum = vec![0.0; 2 * ng + 1];
    let mut p_diff = vec![0.0; ng];

    let mut asm = 0.0;
    let mut contrast = 0.0;
    let mut idm = 0.0;
    let mut entropy = 0.0;
    let mut sum_ij = 0.0;
    for i in 1..=ng {
        for j in 1..=ng {
            let p = g.at(i, j);
            if p == 0.0 {
                continue;
            }
            let diff = i.abs_diff(j);
            let d2 = (diff * diff) as f64;
            px[i] += p;
            py[j] += p;
            p_sum[i + j] += p;
            p_diff[diff] += p;
            asm += p * p;
            contrast += d2 * p;
            idm += p / (1.0 + d2);
            entropy += entropy_term(p);
            sum_ij += (i * j) as f64 * p;
        }
    }

    let mu_x: f64 = (1..=ng).map(|i| i as f64 * px[i]).sum();
    let mu_y: f64 = (1..=ng).map(|j| j as f64 * py[j]).sum();
    let var_x: f64 = (1..=ng).map(|i| (i as f64 - mu_x).powi(2) * px[i]).sum();
    let var_y: f64 = (1..=ng).map(|j| (j as f64 - mu_y).powi(2) * py[j]).sum();
    let sd_prod = (var_x * var_y).sqrt();
    let correlation = if sd_prod > 0.0 {
        (sum_ij - mu_x * mu_y) / sd_prod
    } else {
        0.0
    };
    // sum over p(i,j) of (i - mu)^2 reduces to the row-marginal variance
    let variance = var_x;

    let sum_average: f64 = (2..=2 * ng).map(|k| k as f64 * p_sum[k]).sum();
    let sum_entropy: f64 = (2..=2 * ng).map(|k| entropy_term(p_sum[k])).sum();
    let sum_variance: f64 = (2..=2 * ng)
        .map(|k| (k as f64 - sum_average).powi(2) * p_sum[k])
        .sum();

    let diff_mean: f64 = (0..ng).map(|k| k as f64 * p_diff[k]).sum();
    let diff_variance: f64 = (0..ng).map(|k| (k as f64 - diff_mean).powi(2) * p_diff[k]).sum();
    let diff_entropy: f64 = (0..ng).map(|k| entropy_term(p_diff[k])).sum();

    let hx: f64 = (1..=ng).map(|i| entropy_term(px[i])).sum();
    let hy: f64 = (1..=ng).map(|j| entropy_term(py[j])).sum();
    let mut hxy1 = 0.0;
    let mut hxy2 = 0.0;
    for i in 1..=ng {
        if px[i] == 0.0 {
            continue;
        }
        for j in 1..=ng {
            if py[j] == 0.0 {
                continue;
            }
            let prod = px[i] * py[j];
            let log_prod = prod.log2();
            hxy1 -= g.at(i, j) * log_prod;
            hxy2 -= prod * log_prod;
        }
    }
    let hmax = hx.max(hy);
    let imc1 = if hmax > 0.0 { (entropy - hxy1) / hmax } else { 0.0 };
    let imc2 = (1.0 - (-2.0 * (hxy2 - entropy)).exp()).max(0.0).sqrt();

    [
        asm,
        contrast,
        correlation,
        variance,
        idm,
        sum_average,
        sum_entropy,
        sum_variance,
        entropy,
        diff_variance,
        diff_entropy,
        imc1,
        imc2,
    ]
}
