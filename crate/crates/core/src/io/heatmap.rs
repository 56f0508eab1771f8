//! Binary portable graymap (`P5`) snapshots of single slices.

use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::{Volume3D, DEFAULT_EPSILON};

/// Encodes slice `z` as 8-bit P5, scaled by the slice's own range as
/// `255 * (v - min + eps) / (max - min + eps)`. A constant slice therefore
/// renders fully white.
pub fn encode_heatmap(map: &Volume3D, z: usize) -> Result<Vec<u8>> {
    let d = map.dims();
    if z >= d.z {
        return Err(Error::InvalidParameter(format!("slice {z} out of range for {} slices", d.z)));
    }
    let slice = map.slice(z);
    let (lo, hi) = slice
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v as f64), hi.max(v as f64)));
    let denom = hi - lo + DEFAULT_EPSILON;
    let mut out = format!("P5\n{} {}\n255\n", d.x, d.y).into_bytes();
    out.extend(slice.iter().map(|&v| (255.0 * (v as f64 - lo + DEFAULT_EPSILON) / denom).round().clamp(0.0, 255.0) as u8));
    Ok(out)
}

pub fn write_heatmap(map: &Volume3D, z: usize, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_heatmap(map, z)?).map_err(|e| Error::file(path, e))
}
