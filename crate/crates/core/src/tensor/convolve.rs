use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

use super::{Volume3D, Volume4D};

/// How samples outside the grid are synthesized.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// Clamp to the nearest edge sample.
    #[default]
    Replicate,
    Zero,
    Periodic,
}

impl Boundary {
    /// Source index for a possibly out-of-range position, or `None` when the
    /// sample is an implicit zero.
    #[inline]
    pub fn resolve(self, pos: isize, n: usize) -> Option<usize> {
        let n_i = n as isize;
        if (0..n_i).contains(&pos) {
            return Some(pos as usize);
        }
        match self {
            Boundary::Replicate => Some(pos.clamp(0, n_i - 1) as usize),
            Boundary::Zero => None,
            Boundary::Periodic => Some(pos.rem_euclid(n_i) as usize),
        }
    }
}

/// Dense kernel over `(t, z, y, x)`. 3D kernels have a unit time extent.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    dims: [usize; 4],
    weights: Vec<f64>,
}

impl Kernel {
    pub fn new4(dims: [usize; 4], weights: Vec<f64>) -> Result<Self> {
        if dims.iter().any(|&d| d == 0 || d % 2 == 0) {
            return Err(Error::InvalidParameter(format!("kernel extents must be odd, got {dims:?}")));
        }
        if weights.len() != dims.iter().product::<usize>() {
            return Err(Error::Shape(format!("kernel has {} weights for dims {dims:?}", weights.len())));
        }
        Ok(Kernel { dims, weights })
    }

    pub fn new3(dims: [usize; 3], weights: Vec<f64>) -> Result<Self> {
        Self::new4([1, dims[0], dims[1], dims[2]], weights)
    }

    /// Box-average kernel: every weight is `1 / len`.
    pub fn mean3(extent: usize) -> Result<Self> {
        let n = extent * extent * extent;
        Self::new3([extent; 3], vec![1.0 / n as f64; n])
    }

    /// Single unit weight at the center.
    pub fn identity3(extent: usize) -> Result<Self> {
        let n = extent * extent * extent;
        let mut w = vec![0.0; n];
        w[n / 2] = 1.0;
        Self::new3([extent; 3], w)
    }

    pub fn dims(&self) -> [usize; 4] {
        self.dims
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// For output position `i` and tap `j`, the source index along one axis.
fn tap_table(n: usize, k: usize, boundary: Boundary) -> Vec<Option<usize>> {
    let half = (k / 2) as isize;
    let mut table = Vec::with_capacity(n * k);
    for i in 0..n as isize {
        for j in 0..k as isize {
            table.push(boundary.resolve(i - (j - half), n));
        }
    }
    table
}

fn check_extents(dims: [usize; 4], kernel: &Kernel) -> Result<()> {
    for (axis, (&kd, &vd)) in kernel.dims.iter().zip(&dims).enumerate() {
        if kd > vd {
            return Err(Error::KernelTooLarge { axis, kernel: kd, extent: vd });
        }
    }
    Ok(())
}

fn convolve_raw(data: &[f32], dims: [usize; 4], kernel: &Kernel, boundary: Boundary) -> Vec<f32> {
    let [nt, nz, ny, nx] = dims;
    let [kt, kz, ky, kx] = kernel.dims;
    let tables = [
        tap_table(nt, kt, boundary),
        tap_table(nz, kz, boundary),
        tap_table(ny, ky, boundary),
        tap_table(nx, kx, boundary),
    ];
    let plane = ny * nx;
    let mut out = vec![0f32; data.len()];
    par::for_each_chunk_mut(&mut out, plane, |p, chunk| {
        let (t, z) = (p / nz, p % nz);
        for y in 0..ny {
            for x in 0..nx {
                let mut acc = 0f64;
                let mut w = kernel.weights.iter();
                for jt in 0..kt {
                    let st = tables[0][t * kt + jt];
                    for jz in 0..kz {
                        let sz = tables[1][z * kz + jz];
                        for jy in 0..ky {
                            let sy = tables[2][y * ky + jy];
                            for jx in 0..kx {
                                let sx = tables[3][x * kx + jx];
                                let weight = *w.next().unwrap();
                                if let (Some(st), Some(sz), Some(sy), Some(sx)) = (st, sz, sy, sx) {
                                    acc += weight * data[((st * nz + sz) * ny + sy) * nx + sx] as f64;
                                }
                            }
                        }
                    }
                }
                chunk[y * nx + x] = acc as f32;
            }
        }
    });
    out
}

/// Discrete convolution `out[i] = sum_k kernel[k] * v[i - k]` with the
/// kernel centered on its middle tap.
pub fn convolve3(v: &Volume3D, kernel: &Kernel, boundary: Boundary) -> Result<Volume3D> {
    if kernel.dims[0] != 1 {
        return Err(Error::InvalidParameter("3D convolution needs a kernel with unit time extent".into()));
    }
    let d = v.dims();
    check_extents([1, d.z, d.y, d.x], kernel)?;
    Ok(convolve3_padded(v, kernel, boundary))
}

/// [`convolve3`] without the extent check, for windows that may be larger
/// than a thin volume; the boundary policy supplies the missing samples.
pub(crate) fn convolve3_padded(v: &Volume3D, kernel: &Kernel, boundary: Boundary) -> Volume3D {
    debug_assert_eq!(kernel.dims[0], 1);
    let d = v.dims();
    v.with_data(convolve_raw(v.data(), [1, d.z, d.y, d.x], kernel, boundary))
}

pub fn convolve4(v: &Volume4D, kernel: &Kernel, boundary: Boundary) -> Result<Volume4D> {
    check_extents(v.dims().as_array(), kernel)?;
    Ok(v.with_data(convolve_raw(v.data(), v.dims().as_array(), kernel, boundary)))
}

/// Normalized Gaussian taps over `[-ceil(3 sigma), ceil(3 sigma)]`.
pub fn gaussian_taps(sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let raw: Vec<f64> = (-radius..=radius)
        .map(|k| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / sum).collect()
}

/// Convolves every line along `axis` (0 = z, 1 = y, 2 = x) with symmetric
/// `taps`. Unlike [`convolve3`], any kernel length is accepted; positions
/// past the edge are resolved by `boundary`.
pub fn convolve_axis(v: &Volume3D, axis: usize, taps: &[f64], boundary: Boundary) -> Volume3D {
    let d = v.dims();
    let n = d.as_array()[axis];
    let half = (taps.len() / 2) as isize;
    let table: Vec<Option<usize>> = (0..n as isize)
        .flat_map(|i| (0..taps.len() as isize).map(move |j| (i, j)))
        .map(|(i, j)| boundary.resolve(i - (j - half), n))
        .collect();
    let stride = match axis {
        0 => d.y * d.x,
        1 => d.x,
        _ => 1,
    };
    let data = v.data();
    let plane = d.y * d.x;
    let mut out = vec![0f32; data.len()];
    par::for_each_chunk_mut(&mut out, plane, |z, chunk| {
        for y in 0..d.y {
            for x in 0..d.x {
                let (pos, base) = match axis {
                    0 => (z, d.index(0, y, x)),
                    1 => (y, d.index(z, 0, x)),
                    _ => (x, d.index(z, y, 0)),
                };
                let row = &table[pos * taps.len()..(pos + 1) * taps.len()];
                let acc: f64 = taps
                    .iter()
                    .zip(row)
                    .filter_map(|(w, s)| s.map(|s| w * data[base + s * stride] as f64))
                    .sum();
                chunk[y * d.x + x] = acc as f32;
            }
        }
    });
    v.with_data(out)
}
