//! Fusion of static and motion cues into one energy field, and the Gaussian
//! focus fitted to it.
//!
//! The center is the energy-weighted mean voxel coordinate. The scale comes
//! from the cube root of the number of voxels above a quantile threshold,
//! divided by the grid diagonal. The focus field is
//! `exp(-(d / scale)^2)` where `d` is the distance to the center measured in
//! units of the per-axis grid extent.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{extract_features, gaussian_smooth, FeatureConfig, FeatureMaps};
use crate::par;
use crate::tensor::{normalize, quantile, rescale_unit, Coord, Dims3, Mask3D, Volume3D, Volume4D, DEFAULT_EPSILON};

/// Scale used when no threshold mask exists to measure one from.
pub const FALLBACK_SCALE: f64 = 1.0 / 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FusionWeights {
    pub static_weight: f64,
    pub motion_weight: f64,
}

impl FusionWeights {
    pub fn new(static_weight: f64, motion_weight: f64) -> Result<Self> {
        let ok = static_weight >= 0.0 && motion_weight >= 0.0 && static_weight + motion_weight > 0.0;
        if !ok || !static_weight.is_finite() || !motion_weight.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "fusion weights must be >= 0 with a positive sum, got ({static_weight}, {motion_weight})"
            )));
        }
        Ok(FusionWeights { static_weight, motion_weight })
    }
}

impl Default for FusionWeights {
    fn default() -> Self {
        FusionWeights { static_weight: 0.1, motion_weight: 0.9 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FocusConfig {
    pub epsilon: f64,
    pub weights: FusionWeights,
    /// Quantile of the fused map used as the segmentation threshold.
    pub percentile: f64,
    /// Gaussian blur applied to the fused map, in voxels.
    pub smooth_sigma: f64,
    /// Numerator of the scale estimate.
    pub scale_factor: f64,
    pub features: FeatureConfig,
}

impl Default for FocusConfig {
    fn default() -> Self {
        FocusConfig {
            epsilon: DEFAULT_EPSILON,
            weights: FusionWeights::default(),
            percentile: 0.9,
            smooth_sigma: 5.0,
            scale_factor: 3.0,
            features: FeatureConfig::default(),
        }
    }
}

/// Why a focus result did not come from the full motion-driven path.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FocusFallback {
    /// The sequence has no temporal variation; the focus relies on the
    /// static features alone.
    StaticOnly,
    /// The fused map is constant, so nothing exceeds the threshold; the
    /// scale falls back to [`FALLBACK_SCALE`].
    EmptyMask,
    /// The fused map has zero total energy; the focus sits at the
    /// geometric grid center with [`FALLBACK_SCALE`].
    GeometricCenter,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FocusResult {
    /// Fused map after smoothing; the mask and center are computed from it.
    pub fused: Volume3D,
    pub center: Coord,
    pub scale: f64,
    pub mask: Mask3D,
    pub rbf: Volume3D,
    pub threshold: f32,
    pub fallback: Option<FocusFallback>,
}

impl FocusResult {
    pub fn dims(&self) -> Dims3 {
        self.fused.dims()
    }

    pub fn r_max(&self) -> Coord {
        self.dims().r_max()
    }
}

/// `v = w_s * x_s + w_t * x_t`, with `x_s` the mean of the rescaled mean and
/// std maps and `x_t` the rescaled motion map. Each map is min-max rescaled
/// to `[0, 1]` on its own first.
pub fn fuse(maps: &FeatureMaps, weights: &FusionWeights) -> Result<Volume3D> {
    let d = maps.motion.dims();
    if maps.mean.dims() != d || maps.std.dims() != d {
        return Err(Error::Shape("feature maps do not share dims".into()));
    }
    let mean = rescale_unit(&maps.mean);
    let std = rescale_unit(&maps.std);
    let xs: Vec<f32> = mean
        .data()
        .iter()
        .zip(std.data())
        .map(|(&a, &b)| ((a as f64 + b as f64) / 2.0) as f32)
        .collect();
    combine(&mean.with_data(xs), &rescale_unit(&maps.motion), weights)
}

/// Weighted sum of an already-rescaled static map and motion map.
pub fn combine(x_s: &Volume3D, x_t: &Volume3D, weights: &FusionWeights) -> Result<Volume3D> {
    if x_s.dims() != x_t.dims() {
        return Err(Error::DimMismatch {
            expected: x_s.dims().as_array().to_vec(),
            found: x_t.dims().as_array().to_vec(),
        });
    }
    let (ws, wt) = (weights.static_weight, weights.motion_weight);
    let v = x_s
        .data()
        .iter()
        .zip(x_t.data())
        .map(|(&s, &t)| (ws * s as f64 + wt * t as f64) as f32)
        .collect();
    Ok(x_s.with_data(v))
}

/// Energy-weighted mean voxel coordinate.
pub fn energy_center(v: &Volume3D) -> Result<Coord> {
    let d = v.dims();
    let (mut sx, mut sy, mut sz, mut total) = (0f64, 0f64, 0f64, 0f64);
    for z in 0..d.z {
        for y in 0..d.y {
            let row = &v.data()[d.index(z, y, 0)..d.index(z, y, 0) + d.x];
            let mut rx = 0f64;
            let mut rs = 0f64;
            for (x, &e) in row.iter().enumerate() {
                rx += e as f64 * x as f64;
                rs += e as f64;
            }
            sx += rx;
            sy += rs * y as f64;
            sz += rs * z as f64;
            total += rs;
        }
    }
    if total <= 0.0 || !total.is_finite() {
        return Err(Error::DegenerateEnergy);
    }
    Ok(Coord::new(sx / total, sy / total, sz / total))
}

/// Voxels strictly above the `p`-quantile of `v`, plus the threshold.
pub fn threshold_mask(v: &Volume3D, p: f64) -> Result<(Mask3D, f32)> {
    let q = quantile(v.data(), p)?;
    let mask = v.data().iter().map(|&x| x > q).collect();
    Ok((Mask3D::new(v.dims(), mask)?, q))
}

/// `factor / |r_max| * cbrt(|mask|)`.
pub fn scale_estimate(mask: &Mask3D, r_max: Coord, factor: f64) -> Result<f64> {
    let n = mask.count();
    if n == 0 {
        return Err(Error::EmptyMask);
    }
    Ok(factor / r_max.norm() * (n as f64).cbrt())
}

/// Gaussian focus field centered at `center` with width `scale`, distances
/// normalized per axis by `r_max`.
pub fn rbf_field(dims: Dims3, center: Coord, scale: f64, r_max: Coord) -> Result<Volume3D> {
    if scale <= 0.0 || !scale.is_finite() {
        return Err(Error::InvalidParameter(format!("rbf scale must be > 0, got {scale}")));
    }
    let plane = dims.y * dims.x;
    let mut out = vec![0f32; dims.len()];
    par::for_each_chunk_mut(&mut out, plane, |z, chunk| {
        let dz = (z as f64 - center.z) / r_max.z;
        for y in 0..dims.y {
            let dy = (y as f64 - center.y) / r_max.y;
            for x in 0..dims.x {
                let dx = (x as f64 - center.x) / r_max.x;
                let d2 = dx * dx + dy * dy + dz * dz;
                let phi = (-d2 / (scale * scale)).exp() as f32;
                chunk[y * dims.x + x] = phi.max(f32::MIN_POSITIVE);
            }
        }
    });
    Volume3D::new(dims, out)
}

/// Fuse, smooth, threshold and fit the focus on precomputed features.
pub fn focus_from_features(maps: &FeatureMaps, cfg: &FocusConfig) -> Result<FocusResult> {
    let fused = gaussian_smooth(&fuse(maps, &cfg.weights)?, cfg.smooth_sigma);
    let dims = fused.dims();
    let r_max = dims.r_max();
    let (mask, threshold) = threshold_mask(&fused, cfg.percentile)?;

    let static_only = maps.motion.data().iter().all(|&x| x == 0.0);
    let (center, scale, fallback) = match energy_center(&fused) {
        Err(Error::DegenerateEnergy) => (dims.center(), FALLBACK_SCALE, Some(FocusFallback::GeometricCenter)),
        Err(e) => return Err(e),
        Ok(center) => match scale_estimate(&mask, r_max, cfg.scale_factor) {
            Ok(scale) => (center, scale, static_only.then_some(FocusFallback::StaticOnly)),
            Err(Error::EmptyMask) => (center, FALLBACK_SCALE, Some(FocusFallback::EmptyMask)),
            Err(e) => return Err(e),
        },
    };
    let rbf = rbf_field(dims, center, scale, r_max)?;
    Ok(FocusResult { fused, center, scale, mask, rbf, threshold, fallback })
}

/// Full localization: normalize, extract features, fuse, smooth,
/// threshold, then fit center, scale and focus field.
///
/// Degenerate inputs do not error; the result carries a [`FocusFallback`]
/// marker describing which substitute was used.
pub fn run_focus(v: &Volume4D, cfg: &FocusConfig) -> Result<FocusResult> {
    if !(0.0..=1.0).contains(&cfg.percentile) {
        return Err(Error::InvalidParameter(format!("percentile must lie in [0, 1], got {}", cfg.percentile)));
    }
    if cfg.smooth_sigma.is_nan() || cfg.smooth_sigma < 0.0 {
        return Err(Error::InvalidParameter(format!("smoothing sigma must be >= 0, got {}", cfg.smooth_sigma)));
    }
    let normalized = normalize(v, cfg.epsilon)?;
    let maps = extract_features(&normalized, &cfg.features)?;
    focus_from_features(&maps, cfg)
}
