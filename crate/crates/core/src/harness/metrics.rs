use crate::scene::Frame;
use crate::{Error, Result};

/// PSNR of one frame in dB; identical frames give `f64::INFINITY`.
pub fn psnr(reference: &Frame, test: &Frame) -> Result<f64> {
    if reference.dims() != test.dims() {
        return Err(Error::DimensionMismatch(format!(
            "reference {:?} vs test {:?}",
            reference.dims(),
            test.dims()
        )));
    }
    let mut sse = 0u64;
    for (a, b) in reference.pixels().iter().zip(test.pixels()) {
        for ch in 0..3 {
            let d = a[ch] as i64 - b[ch] as i64;
            sse += (d * d) as u64;
        }
    }
    if sse == 0 {
        return Ok(f64::INFINITY);
    }
    let mse = sse as f64 / (3 * reference.pixels().len()) as f64;
    Ok(10.0 * (255.0f64 * 255.0 / mse).log10())
}

pub fn psnr_sequence(reference: &[Frame], test: &[Frame]) -> Result<Vec<f64>> {
    if reference.len() != test.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} reference frames vs {} test frames",
            reference.len(),
            test.len()
        )));
    }
    reference.iter().zip(test).map(|(r, t)| psnr(r, t)).collect()
}

/// Mean over the finite values; infinite only when every value is infinite.
/// An empty slice averages to NaN.
pub fn mean_psnr(values: &[f64]) -> f64 {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return if values.is_empty() { f64::NAN } else { f64::INFINITY };
    }
    finite.iter().sum::<f64>() / finite.len() as f64
}

/// Percentage of transmission time saved against the conventional baseline.
pub fn time_saved(bits_scheme: f64, bits_conventional: f64) -> Result<f64> {
    if bits_conventional <= 0.0 || !bits_conventional.is_finite() {
        return Err(Error::InvalidBaseline);
    }
    Ok(100.0 * (1.0 - bits_scheme / bits_conventional))
}
