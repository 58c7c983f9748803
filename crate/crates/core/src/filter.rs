//! Separable Gaussian filtering with reflect boundaries.

use crate::model::Dims;

/// Normalised 1-D Gaussian taps for `sigma` voxels, radius `ceil(4 sigma)`.
pub fn gaussian_taps(sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let radius = (4.0 * sigma).ceil().max(1.0) as isize;
    let mut taps: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

/// Half-sample symmetric reflection (`d c b a | a b c d | d c b a`).
#[inline]
pub fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    if m < n {
        m as usize
    } else {
        (period - 1 - m) as usize
    }
}

/// Convolve along one axis (0 = x, 1 = y, 2 = z).
pub fn convolve_axis(data: &[f64], dims: Dims, axis: usize, taps: &[f64]) -> Vec<f64> {
    if taps.len() == 1 {
        return data.iter().map(|v| v * taps[0]).collect();
    }
    let radius = (taps.len() / 2) as isize;
    let (n, stride) = match axis {
        0 => (dims.nx, 1),
        1 => (dims.ny, dims.nx),
        _ => (dims.nz, dims.nx * dims.ny),
    };
    let mut out = vec![0.0; data.len()];
    let mut line = vec![0.0; n];
    for start in 0..data.len() {
        // visit each line once, from its first element
        let pos_on_axis = (start / stride) % n;
        if pos_on_axis != 0 {
            continue;
        }
        for (k, l) in line.iter_mut().enumerate() {
            *l = data[start + k * stride];
        }
        for k in 0..n {
            let mut acc = 0.0;
            for (t, w) in taps.iter().enumerate() {
                let src = reflect(k as isize + t as isize - radius, n);
                acc += w * line[src];
            }
            out[start + k * stride] = acc;
        }
    }
    out
}

/// Gaussian blur in the x-y plane with per-axis sigmas in voxels.
pub fn blur_in_plane(data: &[f64], dims: Dims, sigma_x: f64, sigma_y: f64) -> Vec<f64> {
    let tmp = convolve_axis(data, dims, 0, &gaussian_taps(sigma_x));
    convolve_axis(&tmp, dims, 1, &gaussian_taps(sigma_y))
}

/// Full 3-D Gaussian blur with per-axis sigmas in voxels.
pub fn blur_3d(data: &[f64], dims: Dims, sigma: [f64; 3]) -> Vec<f64> {
    let tmp = blur_in_plane(data, dims, sigma[0], sigma[1]);
    convolve_axis(&tmp, dims, 2, &gaussian_taps(sigma[2]))
}
