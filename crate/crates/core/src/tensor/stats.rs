use crate::error::{Error, Result};

use super::volume::min_max;
use super::{Volume3D, Volume4D};

/// Intensity offset that keeps normalization finite on constant input.
pub const DEFAULT_EPSILON: f64 = 1e-7;

fn check_finite(values: &[f32]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

fn normalize_values(values: &[f32], epsilon: f64) -> Result<Vec<f32>> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::InvalidParameter(format!("epsilon must be > 0, got {epsilon}")));
    }
    if values.is_empty() {
        return Err(Error::Empty("normalize"));
    }
    check_finite(values)?;
    let (lo, hi) = min_max(values);
    let (lo, hi) = (lo as f64, hi as f64);
    let denom = hi - lo + epsilon;
    Ok(values.iter().map(|&v| ((v as f64 - lo + epsilon) / denom) as f32).collect())
}

/// Maps intensities into `(0, 1]` via `(v - min + eps) / (max - min + eps)`.
pub fn normalize(v: &Volume4D, epsilon: f64) -> Result<Volume4D> {
    Ok(v.with_data(normalize_values(v.data(), epsilon)?))
}

pub fn normalize3(v: &Volume3D, epsilon: f64) -> Result<Volume3D> {
    Ok(v.with_data(normalize_values(v.data(), epsilon)?))
}

/// Plain min-max rescale to `[0, 1]`. A constant map has no contrast and
/// rescales to all zeros.
pub fn rescale_unit(v: &Volume3D) -> Volume3D {
    let (lo, hi) = v.min_max();
    let range = hi as f64 - lo as f64;
    if range.is_nan() || range <= 0.0 {
        return v.map(|_| 0.0);
    }
    v.map(|x| ((x as f64 - lo as f64) / range) as f32)
}

/// Nearest-rank quantile: the `ceil(p * N)`-th smallest value, with `p = 0`
/// giving the minimum. The result is always an element of `values`.
pub fn quantile(values: &[f32], p: f64) -> Result<f32> {
    if values.is_empty() {
        return Err(Error::Empty("quantile"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("quantile fraction must lie in [0, 1], got {p}")));
    }
    if let Some(index) = values.iter().position(|v| v.is_nan()) {
        return Err(Error::NonFinite { index });
    }
    let n = values.len();
    let rank = ((p * n as f64).ceil() as usize).clamp(1, n);
    let mut scratch = values.to_vec();
    let (_, nth, _) = scratch.select_nth_unstable_by(rank - 1, f32::total_cmp);
    Ok(*nth)
}

/// Element-wise power. Fractional exponents require a non-negative base.
pub fn hadamard_pow(v: &Volume3D, exponent: f64) -> Result<Volume3D> {
    if exponent.fract() != 0.0 {
        if let Some(index) = v.data().iter().position(|&x| x < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "negative base {} at index {index} with fractional exponent {exponent}",
                v.data()[index]
            )));
        }
    }
    if exponent == 1.0 {
        return Ok(v.clone());
    }
    Ok(v.map(|x| (x as f64).powf(exponent) as f32))
}
