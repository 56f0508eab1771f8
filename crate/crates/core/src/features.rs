//! Static appearance features and temporal motion energy.
//!
//! The static cue is a pair of local statistics over a 3x3x3 window: the
//! windowed mean and the square root of the windowed mean of squared
//! deviations from it. The motion cue is the root-mean-square of a central
//! temporal derivative, evaluated independently for every voxel.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::tensor::{
    convolve3_padded, convolve_axis, gaussian_taps, hadamard_pow, Boundary, Kernel, Volume3D, Volume4D,
};

/// Extent of the cubic window used for local statistics.
pub const WINDOW: usize = 3;

/// Central-difference derivative taps along time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TemporalSobel {
    pub taps: [f64; 3],
    pub boundary: TemporalBoundary,
}

impl TemporalSobel {
    pub fn new(boundary: TemporalBoundary) -> Self {
        TemporalSobel { taps: [-1.0, 0.0, 1.0], boundary }
    }
}

impl Default for TemporalSobel {
    fn default() -> Self {
        Self::new(TemporalBoundary::default())
    }
}

/// Extension of the frame sequence past its ends. A cardiac acquisition
/// covers one full cycle, so wrapping around is the default.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TemporalBoundary {
    #[default]
    Periodic,
    Replicate,
}

impl From<TemporalBoundary> for Boundary {
    fn from(b: TemporalBoundary) -> Self {
        match b {
            TemporalBoundary::Periodic => Boundary::Periodic,
            TemporalBoundary::Replicate => Boundary::Replicate,
        }
    }
}

/// Which frame feeds the static features.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StaticFrame {
    #[default]
    First,
    TimeMean,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub static_frame: StaticFrame,
    pub temporal_boundary: TemporalBoundary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMaps {
    pub mean: Volume3D,
    pub std: Volume3D,
    pub motion: Volume3D,
    pub static_frame: StaticFrame,
    /// Voxels whose windowed variance came out negative and were clamped.
    pub clamped: usize,
}

/// Windowed 3x3x3 arithmetic mean, replicate boundary. Axes shorter than
/// the window are padded by replication.
pub fn mean_image(frame: &Volume3D) -> Result<Volume3D> {
    Ok(convolve3_padded(frame, &Kernel::mean3(WINDOW)?, Boundary::Replicate))
}

/// Windowed standard deviation around a precomputed mean image.
///
/// Returns the map and the number of voxels whose variance was negative
/// before the square root (rounding only) and got clamped to zero.
pub fn std_image(frame: &Volume3D, mean: &Volume3D) -> Result<(Volume3D, usize)> {
    if frame.dims() != mean.dims() {
        return Err(Error::DimMismatch {
            expected: frame.dims().as_array().to_vec(),
            found: mean.dims().as_array().to_vec(),
        });
    }
    let sq_dev: Vec<f32> = frame
        .data()
        .iter()
        .zip(mean.data())
        .map(|(&v, &m)| {
            let d = v as f64 - m as f64;
            (d * d) as f32
        })
        .collect();
    let var = convolve3_padded(&frame.with_data(sq_dev), &Kernel::mean3(WINDOW)?, Boundary::Replicate);
    let clamped = var.data().iter().filter(|&&x| x < 0.0).count();
    let var = if clamped > 0 { var.map(|x| x.max(0.0)) } else { var };
    Ok((hadamard_pow(&var, 0.5)?, clamped))
}

/// Root-mean-square temporal derivative per voxel:
/// `sqrt(1/T * sum_t (I * S_t)(t)^2)`.
pub fn motion_energy(v: &Volume4D, sobel: &TemporalSobel) -> Result<Volume3D> {
    let d = v.dims();
    if d.t < 3 {
        return Err(Error::InvalidParameter(format!("motion energy needs at least 3 frames, got {}", d.t)));
    }
    let boundary: Boundary = sobel.boundary.into();
    let frame_len = d.frame_len();
    let plane = d.y * d.x;
    // Source frames for each (t, tap) pair; taps run over offsets -1, 0, +1.
    let frames: Vec<[usize; 3]> = (0..d.t as isize)
        .map(|t| {
            let mut f = [0usize; 3];
            for (j, slot) in f.iter_mut().enumerate() {
                *slot = boundary.resolve(t - (j as isize - 1), d.t).expect("temporal boundary never yields zero");
            }
            f
        })
        .collect();
    let data = v.data();
    let inv_t = 1.0 / d.t as f64;
    let mut out = vec![0f32; frame_len];
    par::for_each_chunk_mut(&mut out, plane, |z, chunk| {
        let base = z * plane;
        for (i, o) in chunk.iter_mut().enumerate() {
            let voxel = base + i;
            let mut acc = 0f64;
            for f in &frames {
                let g: f64 = sobel
                    .taps
                    .iter()
                    .zip(f)
                    .map(|(w, &s)| w * data[s * frame_len + voxel] as f64)
                    .sum();
                acc += g * g;
            }
            *o = (acc * inv_t).sqrt() as f32;
        }
    });
    Volume3D::new(d.spatial(), out)
}

/// Separable Gaussian blur with taps truncated at three sigma and
/// renormalized; replicate boundary. `sigma == 0` is the identity.
pub fn gaussian_smooth(map: &Volume3D, sigma: f64) -> Volume3D {
    if sigma.is_nan() || sigma <= 0.0 {
        return map.clone();
    }
    let taps = gaussian_taps(sigma);
    let zb = convolve_axis(map, 0, &taps, Boundary::Replicate);
    let yb = convolve_axis(&zb, 1, &taps, Boundary::Replicate);
    convolve_axis(&yb, 2, &taps, Boundary::Replicate)
}

/// Computes all three maps from a normalized sequence.
pub fn extract_features(v: &Volume4D, cfg: &FeatureConfig) -> Result<FeatureMaps> {
    let frame = match cfg.static_frame {
        StaticFrame::First => v.frame(0),
        StaticFrame::TimeMean => v.time_mean(),
    };
    let mean = mean_image(&frame)?;
    let (std, clamped) = std_image(&frame, &mean)?;
    let motion = motion_energy(v, &TemporalSobel::new(cfg.temporal_boundary))?;
    Ok(FeatureMaps { mean, std, motion, static_frame: cfg.static_frame, clamped })
}
