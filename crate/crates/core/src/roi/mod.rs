//! Turning a focus into a crop and rescaling it for a segmentation network.
//!
//! The box spans `k * scale * r_max` voxels on each side of the focus center
//! along every spatial axis, clamped to the grid. The in-plane extent is then
//! resampled to the target shape; slices are never resampled.

mod resample;

use serde::{Deserialize, Serialize};

pub use resample::{resample_bicubic, source_position, Image2D, CUBIC_A};

use crate::error::{Error, Result};
use crate::focus::FocusResult;
use crate::par;
use crate::tensor::{normalize, Coord, Dims3, Dims4, Mask4D, Spacing, Volume4D, DEFAULT_EPSILON};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoiConfig {
    /// Box half-extent in units of `scale * r_max`.
    pub k: f64,
    /// In-plane output shape `(height, width)`; `None` keeps the box extent.
    pub target: Option<(usize, usize)>,
    /// Output extents are rounded up to a multiple of this.
    pub multiple: usize,
    /// Re-run intensity normalization on the extracted sequence.
    pub renormalize: bool,
    pub epsilon: f64,
}

impl Default for RoiConfig {
    fn default() -> Self {
        RoiConfig { k: 2.0, target: Some((128, 128)), multiple: 32, renormalize: true, epsilon: DEFAULT_EPSILON }
    }
}

/// Half-open crop bounds in `(z, y, x)` order plus the in-plane output shape.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RoiBox {
    pub lo: [usize; 3],
    pub hi: [usize; 3],
    pub source: Dims3,
    pub target: (usize, usize),
}

impl RoiBox {
    pub fn new(lo: [usize; 3], hi: [usize; 3], source: Dims3, target: (usize, usize)) -> Result<Self> {
        let dims = source.as_array();
        for axis in 0..3 {
            if lo[axis] >= hi[axis] {
                return Err(Error::ZeroExtent { axis });
            }
            if hi[axis] > dims[axis] {
                return Err(Error::OutOfBounds { lo, hi, dims });
            }
        }
        if target.0 == 0 || target.1 == 0 {
            return Err(Error::InvalidParameter(format!("target shape must be positive, got {target:?}")));
        }
        Ok(RoiBox { lo, hi, source, target })
    }

    /// The full grid, with its own in-plane shape as target.
    pub fn full(source: Dims3) -> Self {
        RoiBox { lo: [0; 3], hi: source.as_array(), source, target: (source.y, source.x) }
    }

    pub fn extent(&self) -> Dims3 {
        Dims3::new(self.hi[0] - self.lo[0], self.hi[1] - self.lo[1], self.hi[2] - self.lo[2])
    }

    pub fn contains(&self, z: usize, y: usize, x: usize) -> bool {
        let p = [z, y, x];
        (0..3).all(|a| self.lo[a] <= p[a] && p[a] < self.hi[a])
    }

    /// Whether `other` lies entirely inside `self`.
    pub fn encloses(&self, other: &RoiBox) -> bool {
        (0..3).all(|a| self.lo[a] <= other.lo[a] && other.hi[a] <= self.hi[a])
    }

    pub fn with_target(self, target: (usize, usize)) -> Result<Self> {
        Self::new(self.lo, self.hi, self.source, target)
    }

    fn check_within(&self, dims: Dims3) -> Result<()> {
        let d = dims.as_array();
        if (0..3).any(|a| self.hi[a] > d[a] || self.lo[a] >= self.hi[a]) {
            return Err(Error::OutOfBounds { lo: self.lo, hi: self.hi, dims: d });
        }
        Ok(())
    }
}

/// Box of half-extent `k * scale * r_max[a]` around `center`, clamped to the
/// grid. The voxel nearest the center is always included.
pub fn box_around(center: Coord, scale: f64, dims: Dims3, k: f64) -> Result<RoiBox> {
    if k <= 0.0 || !k.is_finite() {
        return Err(Error::InvalidParameter(format!("radius multiplier must be > 0, got {k}")));
    }
    if scale <= 0.0 || !scale.is_finite() {
        return Err(Error::InvalidParameter(format!("scale must be > 0, got {scale}")));
    }
    let r_max = dims.r_max();
    let nearest = center.nearest_voxel(dims);
    let axes = [
        (center.z, r_max.z, dims.z, nearest.0),
        (center.y, r_max.y, dims.y, nearest.1),
        (center.x, r_max.x, dims.x, nearest.2),
    ];
    let mut lo = [0usize; 3];
    let mut hi = [0usize; 3];
    for (a, &(c, r, n, near)) in axes.iter().enumerate() {
        let half = k * scale * r;
        let l = (c - half).floor().clamp(0.0, n as f64) as usize;
        let h = ((c + half).floor() + 1.0).clamp(0.0, n as f64) as usize;
        lo[a] = l.min(near);
        hi[a] = h.max(near + 1);
        if lo[a] >= hi[a] {
            return Err(Error::ZeroExtent { axis: a });
        }
    }
    let target = (hi[1] - lo[1], hi[2] - lo[2]);
    RoiBox::new(lo, hi, dims, target)
}

pub fn box_from_focus(f: &FocusResult, k: f64) -> Result<RoiBox> {
    box_around(f.center, f.scale, f.dims(), k)
}

/// Smallest extents at least `shape` that are multiples of `m`.
pub fn fit_to_multiple(shape: (usize, usize), m: usize) -> Result<(usize, usize)> {
    if m == 0 {
        return Err(Error::InvalidParameter("multiple must be >= 1".into()));
    }
    Ok((shape.0.div_ceil(m) * m, shape.1.div_ceil(m) * m))
}

/// Box for `f` with the configured output shape attached.
pub fn plan_roi(f: &FocusResult, cfg: &RoiConfig) -> Result<RoiBox> {
    let b = box_from_focus(f, cfg.k)?;
    let target = fit_to_multiple(cfg.target.unwrap_or(b.target), cfg.multiple)?;
    b.with_target(target)
}

/// Copies the box out of every frame.
pub fn crop(v: &Volume4D, b: &RoiBox) -> Result<Volume4D> {
    let d = v.dims();
    b.check_within(d.spatial())?;
    let e = b.extent();
    let out_dims = Dims4::new(d.t, e.z, e.y, e.x);
    let mut data = Vec::with_capacity(out_dims.len());
    for t in 0..d.t {
        for z in b.lo[0]..b.hi[0] {
            for y in b.lo[1]..b.hi[1] {
                let start = d.index(t, z, y, b.lo[2]);
                data.extend_from_slice(&v.data()[start..start + e.x]);
            }
        }
    }
    Volume4D::new(out_dims, v.spacing(), data)
}

/// Crops, rescales every `(t, z)` plane to the box target shape, and
/// optionally renormalizes intensities.
pub fn extract_with_box(v: &Volume4D, b: &RoiBox, cfg: &RoiConfig) -> Result<Volume4D> {
    let cropped = crop(v, b)?;
    let d = cropped.dims();
    let (th, tw) = b.target;
    let resampled = if (th, tw) == (d.y, d.x) {
        cropped
    } else {
        let plane = d.y * d.x;
        let planes: Vec<usize> = (0..d.t * d.z).collect();
        let out = par::map_collect(&planes, |&p| {
            let src = Image2D::new(d.y, d.x, cropped.data()[p * plane..(p + 1) * plane].to_vec())?;
            resample_bicubic(&src, th, tw)
        });
        let mut data = Vec::with_capacity(d.t * d.z * th * tw);
        for img in out {
            data.extend(img?.data);
        }
        let s = v.spacing();
        let spacing = Spacing {
            y: s.y * d.y as f32 / th as f32,
            x: s.x * d.x as f32 / tw as f32,
            ..s
        };
        Volume4D::new(Dims4::new(d.t, d.z, th, tw), spacing, data)?
    };
    if cfg.renormalize {
        normalize(&resampled, cfg.epsilon)
    } else {
        Ok(resampled)
    }
}

/// Plans the box from `f` and extracts the region from `v`.
pub fn extract_roi(v: &Volume4D, f: &FocusResult, cfg: &RoiConfig) -> Result<(Volume4D, RoiBox)> {
    if v.dims().spatial() != f.dims() {
        return Err(Error::DimMismatch {
            expected: f.dims().as_array().to_vec(),
            found: v.dims().spatial().as_array().to_vec(),
        });
    }
    let b = plan_roi(f, cfg)?;
    Ok((extract_with_box(v, &b, cfg)?, b))
}

/// Maps a mask predicted on the extracted region back onto the source grid
/// with nearest-neighbour sampling. Voxels outside the box are unset.
pub fn paste_mask(roi: &Mask4D, b: &RoiBox) -> Result<Mask4D> {
    let rd = roi.dims();
    let e = b.extent();
    if rd.z != e.z {
        return Err(Error::DimMismatch { expected: vec![e.z], found: vec![rd.z] });
    }
    let ys = resample::nearest_indices(rd.y, e.y);
    let xs = resample::nearest_indices(rd.x, e.x);
    let s = b.source;
    let dims = Dims4::new(rd.t, s.z, s.y, s.x);
    let mut data = vec![false; dims.len()];
    for t in 0..rd.t {
        for z in 0..e.z {
            for (y, &sy) in ys.iter().enumerate() {
                for (x, &sx) in xs.iter().enumerate() {
                    data[dims.index(t, b.lo[0] + z, b.lo[1] + y, b.lo[2] + x)] = roi.get(t, z, sy, sx);
                }
            }
        }
    }
    Mask4D::new(dims, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_arithmetic() {
        let d = Dims3::new(100, 100, 100);
        let b = box_around(Coord::new(50.0, 50.0, 50.0), 0.1, d, 2.0).unwrap();
        assert_eq!(b.lo, [30; 3]);
        assert_eq!(b.hi, [70; 3]);
    }

    #[test]
    fn large_scale_clamps_to_full_grid() {
        let d = Dims3::new(8, 20, 30);
        let b = box_around(d.center(), 1.0, d, 2.0).unwrap();
        assert_eq!((b.lo, b.hi), ([0; 3], [8, 20, 30]));
    }

    #[test]
    fn zero_multiplier_rejected() {
        let d = Dims3::new(8, 8, 8);
        assert!(box_around(d.center(), 0.5, d, 0.0).is_err());
    }

    #[test]
    fn tiny_box_keeps_nearest_voxel() {
        let d = Dims3::new(10, 10, 10);
        let c = Coord::new(5.55, 2.45, 9.0);
        let b = box_around(c, 1e-4, d, 2.0).unwrap();
        let (z, y, x) = c.nearest_voxel(d);
        assert!(b.contains(z, y, x));
    }

    #[test]
    fn multiples() {
        assert_eq!(fit_to_multiple((97, 120), 32).unwrap(), (128, 128));
        assert_eq!(fit_to_multiple((64, 64), 32).unwrap(), (64, 64));
        assert_eq!(fit_to_multiple((13, 7), 1).unwrap(), (13, 7));
        assert!(fit_to_multiple((1, 1), 0).is_err());
    }

    fn ramp4() -> Volume4D {
        Volume4D::from_fn(Dims4::new(3, 4, 5, 6), Spacing::default(), |t, z, y, x| (t * 1000 + z * 100 + y * 10 + x) as f32)
            .unwrap()
    }

    #[test]
    fn crop_examples() {
        let v = ramp4();
        let full = RoiBox::full(v.dims().spatial());
        assert_eq!(crop(&v, &full).unwrap(), v);

        let one = RoiBox::new([2, 3, 4], [3, 4, 5], full.source, (1, 1)).unwrap();
        let c = crop(&v, &one).unwrap();
        assert_eq!(c.dims(), Dims4::new(3, 1, 1, 1));
        assert_eq!(c.data(), &[234.0, 1234.0, 2234.0]);

        let b = RoiBox::new([1, 1, 2], [3, 4, 6], full.source, (3, 4)).unwrap();
        let once = crop(&v, &b).unwrap();
        let twice = crop(&once, &RoiBox::full(once.dims().spatial())).unwrap();
        assert_eq!(once, twice);

        let bad = RoiBox { lo: [0, 0, 0], hi: [5, 5, 6], source: full.source, target: (5, 6) };
        assert!(crop(&v, &bad).is_err());
    }

    #[test]
    fn paste_round_trips_identity_box() {
        let dims = Dims4::new(2, 2, 3, 3);
        let m = Mask4D::new(dims, (0..dims.len()).map(|i| i % 3 == 0).collect()).unwrap();
        let b = RoiBox::full(dims.spatial());
        assert_eq!(paste_mask(&m, &b).unwrap(), m);
    }
}
