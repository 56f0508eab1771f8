//! Separable Catmull-Rom resampling of 2D planes.
//!
//! Output samples are placed with corners aligned: the first and last output
//! samples coincide with the first and last input samples, so every output
//! position lies inside the source support. Taps that fall past an edge are
//! filled by linear extrapolation of the two outermost samples; this keeps
//! constants and linear ramps exact all the way to the border.

use crate::error::{Error, Result};

/// Catmull-Rom member of the Keys cubic family.
pub const CUBIC_A: f64 = -0.5;

/// Row-major 2D plane.
#[derive(Clone, Debug, PartialEq)]
pub struct Image2D {
    pub height: usize,
    pub width: usize,
    pub data: Vec<f32>,
}

impl Image2D {
    pub fn new(height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        if height == 0 || width == 0 || data.len() != height * width {
            return Err(Error::Shape(format!("{} values for a {height}x{width} plane", data.len())));
        }
        Ok(Image2D { height, width, data })
    }

    pub fn from_fn(height: usize, width: usize, f: impl Fn(usize, usize) -> f32) -> Result<Self> {
        let data = (0..height).flat_map(|y| (0..width).map(move |x| (y, x))).map(|(y, x)| f(y, x)).collect();
        Self::new(height, width, data)
    }

    pub fn get(&self, y: usize, x: usize) -> f32 {
        self.data[y * self.width + x]
    }
}

fn cubic_weight(s: f64) -> f64 {
    let s = s.abs();
    if s <= 1.0 {
        (CUBIC_A + 2.0) * s * s * s - (CUBIC_A + 3.0) * s * s + 1.0
    } else if s < 2.0 {
        CUBIC_A * s * s * s - 5.0 * CUBIC_A * s * s + 8.0 * CUBIC_A * s - 4.0 * CUBIC_A
    } else {
        0.0
    }
}

/// Source position of output sample `i` under corner alignment.
pub fn source_position(i: usize, n_in: usize, n_out: usize) -> f64 {
    if n_out == 1 {
        (n_in as f64 - 1.0) / 2.0
    } else {
        i as f64 * (n_in as f64 - 1.0) / (n_out as f64 - 1.0)
    }
}

/// `(source index, weight)` contributions for each output position.
fn axis_weights(n_in: usize, n_out: usize) -> Vec<Vec<(usize, f64)>> {
    (0..n_out)
        .map(|i| {
            if n_in == 1 {
                return vec![(0, 1.0)];
            }
            let pos = source_position(i, n_in, n_out);
            let base = pos.floor();
            let frac = pos - base;
            let base = base as isize;
            let last = n_in as isize - 1;
            let mut taps = Vec::with_capacity(6);
            for j in -1..=2isize {
                let w = cubic_weight(frac - j as f64);
                if w == 0.0 {
                    continue;
                }
                let idx = base + j;
                if idx < 0 {
                    // p(idx) = (1 - idx) p(0) + idx p(1)
                    taps.push((0, w * (1 - idx) as f64));
                    taps.push((1, w * idx as f64));
                } else if idx > last {
                    let k = (idx - last) as f64;
                    taps.push((last as usize, w * (1.0 + k)));
                    taps.push((last as usize - 1, -w * k));
                } else {
                    taps.push((idx as usize, w));
                }
            }
            taps
        })
        .collect()
}

/// Rescales `src` to `height x width` with Catmull-Rom bicubic weights.
pub fn resample_bicubic(src: &Image2D, height: usize, width: usize) -> Result<Image2D> {
    if height == 0 || width == 0 {
        return Err(Error::InvalidParameter(format!("target extent must be > 0, got {height}x{width}")));
    }
    let wx = axis_weights(src.width, width);
    let wy = axis_weights(src.height, height);

    let mut rows = vec![0f64; src.height * width];
    for y in 0..src.height {
        let line = &src.data[y * src.width..(y + 1) * src.width];
        for (x, taps) in wx.iter().enumerate() {
            rows[y * width + x] = taps.iter().map(|&(i, w)| w * line[i] as f64).sum();
        }
    }
    let mut out = Vec::with_capacity(height * width);
    for taps in &wy {
        for x in 0..width {
            let v: f64 = taps.iter().map(|&(i, w)| w * rows[i * width + x]).sum();
            out.push(v as f32);
        }
    }
    Image2D::new(height, width, out)
}

/// Nearest-neighbour index map under the same corner alignment.
pub(crate) fn nearest_indices(n_in: usize, n_out: usize) -> Vec<usize> {
    (0..n_out)
        .map(|i| (source_position(i, n_in, n_out).round() as usize).min(n_in - 1))
        .collect()
}
