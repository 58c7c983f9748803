use crate::error::{Error, Result};

/// Mean, RMS deviation ("contrast"), sample SD, skewness and kurtosis of raw
/// intensities. Skewness and kurtosis normalise the population third and
/// fourth moments by powers of the N-1 variance.
pub fn histogram_features(x: &[f64]) -> Result<[f64; 5]> {
    if x.len() < 2 {
        return Err(Error::Domain(format!("need at least 2 voxels, got {}", x.len())));
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in x {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let contrast = (m2 / n).sqrt();
    let var = m2 / (n - 1.0);
    let sd = var.sqrt();
    let (skew, kurt) = if m2 == 0.0 {
        (0.0, 0.0)
    } else {
        (m3 / n / var.powf(1.5), m4 / n / (var * var))
    };
    Ok([mean, contrast, sd, skew, kurt])
}
