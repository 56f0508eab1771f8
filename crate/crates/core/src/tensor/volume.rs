use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Extents of a `(t, z, y, x)` sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims4 {
    pub t: usize,
    pub z: usize,
    pub y: usize,
    pub x: usize,
}

/// Extents of a `(z, y, x)` volume.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims3 {
    pub z: usize,
    pub y: usize,
    pub x: usize,
}

impl Dims4 {
    pub const fn new(t: usize, z: usize, y: usize, x: usize) -> Self {
        Dims4 { t, z, y, x }
    }

    pub fn len(&self) -> usize {
        self.t * self.z * self.y * self.x
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spatial(&self) -> Dims3 {
        Dims3 { z: self.z, y: self.y, x: self.x }
    }

    pub fn as_array(&self) -> [usize; 4] {
        [self.t, self.z, self.y, self.x]
    }

    #[inline]
    pub fn index(&self, t: usize, z: usize, y: usize, x: usize) -> usize {
        ((t * self.z + z) * self.y + y) * self.x + x
    }

    pub fn frame_len(&self) -> usize {
        self.z * self.y * self.x
    }

    fn check(&self) -> Result<()> {
        if self.as_array().contains(&0) {
            return Err(Error::Shape(format!("all extents must be >= 1, got {:?}", self.as_array())));
        }
        Ok(())
    }
}

impl Dims3 {
    pub const fn new(z: usize, y: usize, x: usize) -> Self {
        Dims3 { z, y, x }
    }

    pub fn len(&self) -> usize {
        self.z * self.y * self.x
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_array(&self) -> [usize; 3] {
        [self.z, self.y, self.x]
    }

    #[inline]
    pub fn index(&self, z: usize, y: usize, x: usize) -> usize {
        (z * self.y + y) * self.x + x
    }

    /// Inverse of [`Dims3::index`].
    #[inline]
    pub fn coords(&self, i: usize) -> (usize, usize, usize) {
        let x = i % self.x;
        let y = (i / self.x) % self.y;
        let z = i / (self.x * self.y);
        (z, y, x)
    }

    /// Largest in-grid coordinate along each axis, `(W-1, H-1, Z-1)`.
    ///
    /// Singleton axes report 1 instead of 0 so the value can be used as a
    /// divisor; every coordinate on such an axis is 0 anyway.
    pub fn r_max(&self) -> Coord {
        let m = |n: usize| if n > 1 { (n - 1) as f64 } else { 1.0 };
        Coord::new(m(self.x), m(self.y), m(self.z))
    }

    pub fn center(&self) -> Coord {
        Coord::new(
            (self.x as f64 - 1.0) / 2.0,
            (self.y as f64 - 1.0) / 2.0,
            (self.z as f64 - 1.0) / 2.0,
        )
    }

    fn check(&self) -> Result<()> {
        if self.as_array().contains(&0) {
            return Err(Error::Shape(format!("all extents must be >= 1, got {:?}", self.as_array())));
        }
        Ok(())
    }
}

/// Physical sampling: frame period and voxel size in mm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spacing {
    pub t: f32,
    pub z: f32,
    pub y: f32,
    pub x: f32,
}

impl Default for Spacing {
    fn default() -> Self {
        Spacing { t: 1.0, z: 1.0, y: 1.0, x: 1.0 }
    }
}

impl Spacing {
    pub fn as_array(&self) -> [f32; 4] {
        [self.t, self.z, self.y, self.x]
    }

    fn check(&self) -> Result<()> {
        if self.as_array().iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "spacing must be strictly positive, got {:?}",
                self.as_array()
            )));
        }
        Ok(())
    }
}

/// Continuous voxel coordinate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Coord {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Coord {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Coord { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn distance(&self, other: &Coord) -> f64 {
        Coord::new(self.x - other.x, self.y - other.y, self.z - other.z).norm()
    }

    /// Nearest in-grid voxel as `(z, y, x)`.
    pub fn nearest_voxel(&self, dims: Dims3) -> (usize, usize, usize) {
        let r = |v: f64, n: usize| (v.round().max(0.0) as usize).min(n - 1);
        (r(self.z, dims.z), r(self.y, dims.y), r(self.x, dims.x))
    }
}

/// Dense `(t, z, y, x)` image sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct Volume4D {
    dims: Dims4,
    spacing: Spacing,
    data: Vec<f32>,
}

impl Volume4D {
    pub fn new(dims: Dims4, spacing: Spacing, data: Vec<f32>) -> Result<Self> {
        dims.check()?;
        spacing.check()?;
        if data.len() != dims.len() {
            return Err(Error::Shape(format!(
                "data length {} does not match dims {:?}",
                data.len(),
                dims.as_array()
            )));
        }
        Ok(Volume4D { dims, spacing, data })
    }

    pub fn zeros(dims: Dims4, spacing: Spacing) -> Result<Self> {
        Self::new(dims, spacing, vec![0.0; dims.len()])
    }

    pub fn from_fn(dims: Dims4, spacing: Spacing, f: impl Fn(usize, usize, usize, usize) -> f32) -> Result<Self> {
        let mut data = Vec::with_capacity(dims.len());
        for t in 0..dims.t {
            for z in 0..dims.z {
                for y in 0..dims.y {
                    for x in 0..dims.x {
                        data.push(f(t, z, y, x));
                    }
                }
            }
        }
        Self::new(dims, spacing, data)
    }

    pub fn dims(&self) -> Dims4 {
        self.dims
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn get(&self, t: usize, z: usize, y: usize, x: usize) -> f32 {
        self.data[self.dims.index(t, z, y, x)]
    }

    /// Copy of frame `t` as a 3D volume.
    pub fn frame(&self, t: usize) -> Volume3D {
        let n = self.dims.frame_len();
        Volume3D {
            dims: self.dims.spatial(),
            data: self.data[t * n..(t + 1) * n].to_vec(),
        }
    }

    /// Voxel-wise mean over time.
    pub fn time_mean(&self) -> Volume3D {
        let n = self.dims.frame_len();
        let mut acc = vec![0f64; n];
        for frame in self.data.chunks_exact(n) {
            acc.iter_mut().zip(frame).for_each(|(a, &v)| *a += v as f64);
        }
        let t = self.dims.t as f64;
        Volume3D {
            dims: self.dims.spatial(),
            data: acc.into_iter().map(|a| (a / t) as f32).collect(),
        }
    }

    pub(crate) fn with_data(&self, data: Vec<f32>) -> Self {
        debug_assert_eq!(data.len(), self.data.len());
        Volume4D { dims: self.dims, spacing: self.spacing, data }
    }
}

/// Dense `(z, y, x)` scalar volume.
#[derive(Clone, Debug, PartialEq)]
pub struct Volume3D {
    dims: Dims3,
    data: Vec<f32>,
}

impl Volume3D {
    pub fn new(dims: Dims3, data: Vec<f32>) -> Result<Self> {
        dims.check()?;
        if data.len() != dims.len() {
            return Err(Error::Shape(format!(
                "data length {} does not match dims {:?}",
                data.len(),
                dims.as_array()
            )));
        }
        Ok(Volume3D { dims, data })
    }

    pub fn filled(dims: Dims3, value: f32) -> Result<Self> {
        Self::new(dims, vec![value; dims.len()])
    }

    pub fn from_fn(dims: Dims3, f: impl Fn(usize, usize, usize) -> f32) -> Result<Self> {
        let mut data = Vec::with_capacity(dims.len());
        for z in 0..dims.z {
            for y in 0..dims.y {
                for x in 0..dims.x {
                    data.push(f(z, y, x));
                }
            }
        }
        Self::new(dims, data)
    }

    pub fn dims(&self) -> Dims3 {
        self.dims
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn get(&self, z: usize, y: usize, x: usize) -> f32 {
        self.data[self.dims.index(z, y, x)]
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> Volume3D {
        Volume3D { dims: self.dims, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    /// Row-major `(y, x)` copy of slice `z`.
    pub fn slice(&self, z: usize) -> &[f32] {
        let n = self.dims.y * self.dims.x;
        &self.data[z * n..(z + 1) * n]
    }

    pub fn min_max(&self) -> (f32, f32) {
        min_max(&self.data)
    }

    pub(crate) fn with_data(&self, data: Vec<f32>) -> Self {
        debug_assert_eq!(data.len(), self.data.len());
        Volume3D { dims: self.dims, data }
    }
}

pub(crate) fn min_max(values: &[f32]) -> (f32, f32) {
    values
        .iter()
        .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// Binary `(z, y, x)` mask.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask3D {
    dims: Dims3,
    data: Vec<bool>,
}

impl Mask3D {
    pub fn new(dims: Dims3, data: Vec<bool>) -> Result<Self> {
        dims.check()?;
        if data.len() != dims.len() {
            return Err(Error::Shape(format!("mask length {} does not match dims {:?}", data.len(), dims.as_array())));
        }
        Ok(Mask3D { dims, data })
    }

    pub fn dims(&self) -> Dims3 {
        self.dims
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn get(&self, z: usize, y: usize, x: usize) -> bool {
        self.data[self.dims.index(z, y, x)]
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }
}

/// Binary `(t, z, y, x)` mask, e.g. per-frame ground-truth labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask4D {
    dims: Dims4,
    data: Vec<bool>,
}

impl Mask4D {
    pub fn new(dims: Dims4, data: Vec<bool>) -> Result<Self> {
        dims.check()?;
        if data.len() != dims.len() {
            return Err(Error::Shape(format!("mask length {} does not match dims {:?}", data.len(), dims.as_array())));
        }
        Ok(Mask4D { dims, data })
    }

    /// Voxels with a nonzero value are set.
    pub fn from_volume(v: &Volume4D) -> Self {
        Mask4D { dims: v.dims(), data: v.data().iter().map(|&x| x != 0.0).collect() }
    }

    pub fn to_volume(&self, spacing: Spacing) -> Volume4D {
        let data = self.data.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        Volume4D { dims: self.dims, spacing, data }
    }

    pub fn dims(&self) -> Dims4 {
        self.dims
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn get(&self, t: usize, z: usize, y: usize, x: usize) -> bool {
        self.data[self.dims.index(t, z, y, x)]
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// The `(y, x)` plane at frame `t`, slice `z`.
    pub fn slice(&self, t: usize, z: usize) -> &[bool] {
        let n = self.dims.y * self.dims.x;
        let start = (t * self.dims.z + z) * n;
        &self.data[start..start + n]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_zero_extent_and_bad_spacing() {
        assert!(Volume4D::zeros(Dims4::new(0, 1, 1, 1), Spacing::default()).is_err());
        let bad = Spacing { t: 1.0, z: 0.0, y: 1.0, x: 1.0 };
        assert!(Volume4D::zeros(Dims4::new(1, 1, 1, 1), bad).is_err());
        assert!(Volume3D::new(Dims3::new(2, 2, 2), vec![0.0; 7]).is_err());
    }

    #[test]
    fn index_round_trips() {
        let d = Dims3::new(3, 4, 5);
        for i in 0..d.len() {
            let (z, y, x) = d.coords(i);
            assert_eq!(d.index(z, y, x), i);
        }
    }

    #[test]
    fn r_max_guards_singleton_axes() {
        assert_eq!(Dims3::new(1, 10, 20).r_max(), Coord::new(19.0, 9.0, 1.0));
    }

    #[test]
    fn time_mean_averages_frames() {
        let v = Volume4D::from_fn(Dims4::new(2, 1, 1, 2), Spacing::default(), |t, _, _, x| (t * 2 + x) as f32).unwrap();
        assert_eq!(v.time_mean().data(), &[1.0, 2.0]);
    }
}
