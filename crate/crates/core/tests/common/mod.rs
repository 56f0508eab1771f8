//! Naive reference implementations used as test oracles. Written for
//! clarity, not speed, and deliberately independent of the library's
//! indexing helpers.

#![allow(dead_code)]

use cardiofocus::tensor::{Boundary, Dims3, Dims4, Spacing, Volume3D, Volume4D};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_dims3(r: &mut ChaCha8Rng, lo: usize, hi: usize) -> Dims3 {
    Dims3::new(r.random_range(lo..=hi), r.random_range(lo..=hi), r.random_range(lo..=hi))
}

pub fn random_volume3(r: &mut ChaCha8Rng, d: Dims3) -> Volume3D {
    let data = (0..d.z * d.y * d.x).map(|_| r.random_range(-1.0f32..1.0)).collect();
    Volume3D::new(d, data).unwrap()
}

pub fn random_volume4(r: &mut ChaCha8Rng, d: Dims4) -> Volume4D {
    let data = (0..d.t * d.z * d.y * d.x).map(|_| r.random_range(-1.0f32..1.0)).collect();
    Volume4D::new(d, Spacing::default(), data).unwrap()
}

/// Maps an out-of-range index back into `[0, n)`, or `None` for zero padding.
fn extend(i: i64, n: usize, b: Boundary) -> Option<usize> {
    let n = n as i64;
    if i >= 0 && i < n {
        return Some(i as usize);
    }
    match b {
        Boundary::Zero => None,
        Boundary::Replicate => Some(if i < 0 { 0 } else { (n - 1) as usize }),
        Boundary::Periodic => {
            let mut j = i;
            while j < 0 {
                j += n;
            }
            while j >= n {
                j -= n;
            }
            Some(j as usize)
        }
    }
}

/// `out[p] = sum_k w[k] * v[p - k]` over a 4D grid, kernel centered.
pub fn convolve_oracle(data: &[f32], dims: [usize; 4], kdims: [usize; 4], w: &[f64], b: Boundary) -> Vec<f64> {
    let [nt, nz, ny, nx] = dims;
    let [kt, kz, ky, kx] = kdims;
    let h = [kt / 2, kz / 2, ky / 2, kx / 2].map(|v| v as i64);
    let at = |t: usize, z: usize, y: usize, x: usize| data[((t * nz + z) * ny + y) * nx + x] as f64;
    let mut out = Vec::with_capacity(data.len());
    for t in 0..nt {
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    let mut acc = 0.0;
                    for a in 0..kt {
                        for c in 0..kz {
                            for e in 0..ky {
                                for g in 0..kx {
                                    let weight = w[((a * kz + c) * ky + e) * kx + g];
                                    let st = extend(t as i64 - (a as i64 - h[0]), nt, b);
                                    let sz = extend(z as i64 - (c as i64 - h[1]), nz, b);
                                    let sy = extend(y as i64 - (e as i64 - h[2]), ny, b);
                                    let sx = extend(x as i64 - (g as i64 - h[3]), nx, b);
                                    if let (Some(st), Some(sz), Some(sy), Some(sx)) = (st, sz, sy, sx) {
                                        acc += weight * at(st, sz, sy, sx);
                                    }
                                }
                            }
                        }
                    }
                    out.push(acc);
                }
            }
        }
    }
    out
}

/// Values of the 27-voxel neighbourhood of `(z, y, x)` with clamped indices.
fn window(f: &Volume3D, z: usize, y: usize, x: usize) -> Vec<f64> {
    let d = f.dims();
    let clamp = |i: i64, n: usize| i.clamp(0, n as i64 - 1) as usize;
    let mut out = Vec::with_capacity(27);
    for dz in -1i64..=1 {
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                out.push(f.get(clamp(z as i64 + dz, d.z), clamp(y as i64 + dy, d.y), clamp(x as i64 + dx, d.x)) as f64);
            }
        }
    }
    out
}

pub fn mean_oracle(f: &Volume3D) -> Vec<f64> {
    let d = f.dims();
    let mut out = Vec::new();
    for z in 0..d.z {
        for y in 0..d.y {
            for x in 0..d.x {
                out.push(window(f, z, y, x).iter().sum::<f64>() / 27.0);
            }
        }
    }
    out
}

/// Two-pass windowed deviation: local means first, then the window average
/// of each neighbour's squared residual against its own local mean.
pub fn std_oracle(f: &Volume3D) -> Vec<f64> {
    let d = f.dims();
    let mean = mean_oracle(f);
    let residual: Vec<f32> =
        f.data().iter().zip(&mean).map(|(&v, &m)| ((v as f64 - m) * (v as f64 - m)) as f32).collect();
    let sq = Volume3D::new(d, residual).unwrap();
    mean_oracle(&sq).into_iter().map(|v| v.max(0.0).sqrt()).collect()
}

/// RMS of the central temporal difference `I(t+1) - I(t-1)`.
pub fn motion_oracle(v: &Volume4D, periodic: bool) -> Vec<f64> {
    let d = v.dims();
    let nt = d.t as i64;
    let frame = |t: i64| -> usize {
        if periodic {
            ((t % nt + nt) % nt) as usize
        } else {
            t.clamp(0, nt - 1) as usize
        }
    };
    let mut out = Vec::new();
    for z in 0..d.z {
        for y in 0..d.y {
            for x in 0..d.x {
                let mut acc = 0.0;
                for t in 0..nt {
                    let g = v.get(frame(t + 1), z, y, x) as f64 - v.get(frame(t - 1), z, y, x) as f64;
                    acc += g * g;
                }
                out.push((acc / nt as f64).sqrt());
            }
        }
    }
    out
}

pub fn center_oracle(v: &Volume3D) -> [f64; 3] {
    let d = v.dims();
    let (mut s, mut w) = ([0.0; 3], 0.0);
    for z in 0..d.z {
        for y in 0..d.y {
            for x in 0..d.x {
                let e = v.get(z, y, x) as f64;
                s[0] += e * x as f64;
                s[1] += e * y as f64;
                s[2] += e * z as f64;
                w += e;
            }
        }
    }
    [s[0] / w, s[1] / w, s[2] / w]
}

pub fn max_abs_diff(a: &[f32], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| (x as f64 - y).abs()).fold(0.0, f64::max)
}
