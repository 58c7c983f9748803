//! Brute-force reference implementation of the 28 features. Shares no code
//! with the library: its own binning, neighbourhood enumeration and run
//! detection, written for clarity over speed.

use std::collections::BTreeMap;

pub const EPS: f64 = 1e-12;

/// Quantized ROI as a map from voxel coordinate to gray level.
pub struct Roi {
    pub levels: BTreeMap<(i64, i64, i64), usize>,
    pub raw: Vec<f64>,
    pub ng: usize,
}

pub fn bin(x: f64, lo: f64, hi: f64, ng: usize) -> usize {
    if hi == lo {
        1
    } else {
        let l = 1 + (ng as f64 * (x - lo) / (hi - lo)).floor() as usize;
        l.min(ng)
    }
}

/// `values` in x-fastest order over `nx * ny * nz`.
pub fn make_roi(dims: (usize, usize, usize), values: &[f64], inside: &[bool], ng: usize) -> Roi {
    let (nx, ny, _) = dims;
    let raw: Vec<f64> = values.iter().zip(inside).filter(|p| *p.1).map(|p| *p.0).collect();
    let lo = raw.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut levels = BTreeMap::new();
    for (i, (&v, &b)) in values.iter().zip(inside).enumerate() {
        if b {
            let x = (i % nx) as i64;
            let y = ((i / nx) % ny) as i64;
            let z = (i / (nx * ny)) as i64;
            levels.insert((x, y, z), bin(v, lo, hi, ng));
        }
    }
    Roi { levels, raw, ng }
}

/// All nonzero offsets of the 3x3x3 (or in-plane 3x3) neighbourhood.
fn offsets(planar: bool) -> Vec<(i64, i64, i64)> {
    let mut out = Vec::new();
    let zs: &[i64] = if planar { &[0] } else { &[-1, 0, 1] };
    for &dz in zs {
        for dy in -1..=1 {
            for dx in -1..=1 {
                if (dx, dy, dz) != (0, 0, 0) {
                    out.push((dx, dy, dz));
                }
            }
        }
    }
    out
}

/// One representative per +/- pair: the lexicographically positive one.
fn directions(planar: bool) -> Vec<(i64, i64, i64)> {
    offsets(planar)
        .into_iter()
        .filter(|&(dx, dy, dz)| (dz, dy, dx) > (0, 0, 0))
        .collect()
}

fn plog(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

fn histogram(x: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let central = |k: i32| x.iter().map(|v| (v - mean).powi(k)).sum::<f64>();
    let contrast = (central(2) / n).sqrt();
    let sd = (central(2) / (n - 1.0)).sqrt();
    let (skew, kurt) = if sd == 0.0 {
        (0.0, 0.0)
    } else {
        (central(3) / n / sd.powi(3), central(4) / n / sd.powi(4))
    };
    vec![mean, contrast, sd, skew, kurt]
}

fn glcm(r: &Roi, planar: bool) -> Vec<f64> {
    let ng = r.ng;
    let mut p = vec![vec![0.0; ng + 1]; ng + 1];
    let mut total = 0.0;
    for (&(x, y, z), &a) in &r.levels {
        for (dx, dy, dz) in offsets(planar) {
            if let Some(&b) = r.levels.get(&(x + dx, y + dy, z + dz)) {
                p[a][b] += 1.0;
                total += 1.0;
            }
        }
    }
    for row in p.iter_mut() {
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    let idx = || (1..=ng).flat_map(|i| (1..=ng).map(move |j| (i, j)));
    let px: Vec<f64> = (0..=ng).map(|i| if i == 0 { 0.0 } else { (1..=ng).map(|j| p[i][j]).sum() }).collect();
    let py: Vec<f64> = (0..=ng).map(|j| if j == 0 { 0.0 } else { (1..=ng).map(|i| p[i][j]).sum() }).collect();
    let mux: f64 = (1..=ng).map(|i| i as f64 * px[i]).sum();
    let muy: f64 = (1..=ng).map(|j| j as f64 * py[j]).sum();
    let sx = (1..=ng).map(|i| (i as f64 - mux).powi(2) * px[i]).sum::<f64>().sqrt();
    let sy = (1..=ng).map(|j| (j as f64 - muy).powi(2) * py[j]).sum::<f64>().sqrt();

    let asm: f64 = idx().map(|(i, j)| p[i][j].powi(2)).sum();
    let contrast: f64 = idx().map(|(i, j)| (i as f64 - j as f64).powi(2) * p[i][j]).sum();
    let correlation = if sx * sy > 0.0 {
        idx().map(|(i, j)| (i as f64 - mux) * (j as f64 - muy) * p[i][j]).sum::<f64>() / (sx * sy)
    } else {
        0.0
    };
    let variance: f64 = idx().map(|(i, j)| (i as f64 - mux).powi(2) * p[i][j]).sum();
    let idm: f64 = idx().map(|(i, j)| p[i][j] / (1.0 + (i as f64 - j as f64).powi(2))).sum();

    let psum = |k: usize| -> f64 { idx().filter(|&(i, j)| i + j == k).map(|(i, j)| p[i][j]).sum() };
    let pdiff = |k: usize| -> f64 { idx().filter(|&(i, j)| i.abs_diff(j) == k).map(|(i, j)| p[i][j]).sum() };
    let sum_avg: f64 = (2..=2 * ng).map(|k| k as f64 * psum(k)).sum();
    let sum_ent: f64 = -(2..=2 * ng).map(|k| plog(psum(k))).sum::<f64>();
    let sum_var: f64 = (2..=2 * ng).map(|k| (k as f64 - sum_avg).powi(2) * psum(k)).sum();
    let ent: f64 = -idx().map(|(i, j)| plog(p[i][j])).sum::<f64>();
    let dmean: f64 = (0..ng).map(|k| k as f64 * pdiff(k)).sum();
    let dvar: f64 = (0..ng).map(|k| (k as f64 - dmean).powi(2) * pdiff(k)).sum();
    let dent: f64 = -(0..ng).map(|k| plog(pdiff(k))).sum::<f64>();

    let hx = -(1..=ng).map(|i| plog(px[i])).sum::<f64>();
    let hy = -(1..=ng).map(|j| plog(py[j])).sum::<f64>();
    let nz = |v: f64| if v > 0.0 { v.log2() } else { 0.0 };
    let hxy1 = -idx().map(|(i, j)| p[i][j] * nz(px[i] * py[j])).sum::<f64>();
    let hxy2 = -idx().map(|(i, j)| px[i] * py[j] * nz(px[i] * py[j])).sum::<f64>();
    let imc1 = if hx.max(hy) > 0.0 { (ent - hxy1) / hx.max(hy) } else { 0.0 };
    let imc2 = (1.0 - (-2.0 * (hxy2 - ent)).exp()).max(0.0).sqrt();
    vec![asm, contrast, correlation, variance, idm, sum_avg, sum_ent, sum_var, ent, dvar, dent, imc1, imc2]
}

fn rlm(r: &Roi, planar: bool) -> Vec<f64> {
    // each voxel adds 1/len to the run it belongs to, so every run totals 1
    let mut runs: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let dirs = directions(planar);
    for (&(x, y, z), &l) in &r.levels {
        for &(dx, dy, dz) in &dirs {
            let same = |k: i64| r.levels.get(&(x + k * dx, y + k * dy, z + k * dz)) == Some(&l);
            let mut fwd = 0;
            while same(fwd + 1) {
                fwd += 1;
            }
            let mut back = 0;
            while same(-(back + 1)) {
                back += 1;
            }
            let len = (fwd + back + 1) as usize;
            *runs.entry((l, len)).or_default() += 1.0 / len as f64;
        }
    }
    let total: f64 = runs.values().sum();
    let sre = runs.iter().map(|(&(_, j), c)| c / (j * j) as f64).sum::<f64>() / total;
    let lre = runs.iter().map(|(&(_, j), c)| c * (j * j) as f64).sum::<f64>() / total;
    let mut by_level: BTreeMap<usize, f64> = BTreeMap::new();
    let mut by_len: BTreeMap<usize, f64> = BTreeMap::new();
    for (&(i, j), &c) in &runs {
        *by_level.entry(i).or_default() += c;
        *by_len.entry(j).or_default() += c;
    }
    let gln = by_level.values().map(|v| v * v).sum::<f64>() / total;
    let rln = by_len.values().map(|v| v * v).sum::<f64>() / total;
    let rp = total / (r.levels.len() * dirs.len()) as f64;
    vec![sre, lre, gln, rln, rp]
}

fn ngldm(r: &Roi, planar: bool) -> Vec<f64> {
    let mut sne = 0.0;
    let mut lne = 0.0;
    for (&(x, y, z), &l) in &r.levels {
        let s = offsets(planar)
            .into_iter()
            .filter(|&(dx, dy, dz)| r.levels.get(&(x + dx, y + dy, z + dz)) == Some(&l))
            .count();
        let w = ((s + 1) * (s + 1)) as f64;
        sne += 1.0 / w;
        lne += w;
    }
    let n = r.levels.len() as f64;
    vec![sne / n, lne / n]
}

fn ngtdm(r: &Roi, planar: bool) -> Vec<f64> {
    let ng = r.ng;
    let mut count = vec![0.0; ng + 1];
    let mut s = vec![0.0; ng + 1];
    for (&(x, y, z), &l) in &r.levels {
        let nbs: Vec<f64> = offsets(planar)
            .into_iter()
            .filter_map(|(dx, dy, dz)| r.levels.get(&(x + dx, y + dy, z + dz)))
            .map(|&v| v as f64)
            .collect();
        if nbs.is_empty() {
            continue;
        }
        let avg = nbs.iter().sum::<f64>() / nbs.len() as f64;
        count[l] += 1.0;
        s[l] += (l as f64 - avg).abs();
    }
    let n: f64 = count.iter().sum();
    let p: Vec<f64> = count.iter().map(|c| c / n).collect();
    let present: Vec<usize> = (1..=ng).filter(|&i| p[i] > 0.0).collect();
    let coarse = (1.0 / (EPS + present.iter().map(|&i| p[i] * s[i]).sum::<f64>())).min(1e6);
    let mut complexity = 0.0;
    let mut strength = 0.0;
    for &i in &present {
        for &j in &present {
            let d = (i as f64 - j as f64).abs();
            complexity += d * (p[i] * s[i] + p[j] * s[j]) / (n * n * (p[i] + p[j]));
            strength += (p[i] + p[j]) * d * d;
        }
    }
    strength /= EPS + present.iter().map(|&i| s[i]).sum::<f64>();
    vec![coarse, complexity, strength]
}

/// All 28 features in canonical feature order.
pub fn features(r: &Roi, planar: bool) -> Vec<f64> {
    let mut out = histogram(&r.raw);
    out.extend(glcm(r, planar));
    out.extend(rlm(r, planar));
    out.extend(ngldm(r, planar));
    out.extend(ngtdm(r, planar));
    out
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * 1f64.max(a.abs()).max(b.abs())
}
