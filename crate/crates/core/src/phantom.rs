//! Synthetic beating-heart phantom with exact myocardium labels.
//!
//! Each short-axis slice shows a ring (myocardium) around a bright disc
//! (blood pool) on a textured background. Ring radii follow a sinusoidal
//! cycle between diastole (`t = 0`) and systole (`t = T/2`) and shrink
//! linearly with slice index toward the apex. Noise is drawn from a ChaCha
//! stream keyed by seed and `(t, z)` plane, so output is bit-identical across
//! platforms and thread counts.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::tensor::{Coord, Dims4, Mask4D, Spacing, Volume4D};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhantomSpec {
    pub dims: Dims4,
    pub spacing: Spacing,
    /// Ring center; `z` is the slice where radii take their nominal values.
    pub center: Coord,
    pub inner_diastole: f64,
    pub outer_diastole: f64,
    pub inner_systole: f64,
    pub outer_systole: f64,
    pub blood: f32,
    pub myocardium: f32,
    pub background: f32,
    /// Amplitude of the static background pattern.
    pub texture: f32,
    /// Relative radius change per full stack of slices; positive shrinks
    /// radii at higher `z`.
    pub taper: f64,
    /// Half-width of the uniform additive noise.
    pub noise: f32,
    pub seed: u64,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        PhantomSpec {
            dims: Dims4::new(12, 8, 64, 64),
            spacing: Spacing { t: 1.0, z: 8.0, y: 1.5, x: 1.5 },
            center: Coord::new(32.0, 32.0, 4.0),
            inner_diastole: 9.0,
            outer_diastole: 15.0,
            inner_systole: 5.0,
            outer_systole: 12.0,
            blood: 0.9,
            myocardium: 0.5,
            background: 0.15,
            texture: 0.02,
            taper: 0.3,
            noise: 0.03,
            seed: 0,
        }
    }
}

impl PhantomSpec {
    /// Default anatomy scaled to `dims`, centered in the grid.
    pub fn for_dims(dims: Dims4) -> Self {
        let base = PhantomSpec::default();
        let s = dims.y.min(dims.x) as f64 / 64.0;
        PhantomSpec {
            dims,
            center: Coord::new(dims.x as f64 / 2.0, dims.y as f64 / 2.0, dims.z as f64 / 2.0),
            inner_diastole: base.inner_diastole * s,
            outer_diastole: base.outer_diastole * s,
            inner_systole: base.inner_systole * s,
            outer_systole: base.outer_systole * s,
            ..base
        }
    }

    /// A phantom whose radii do not change over time.
    pub fn without_motion(mut self) -> Self {
        self.inner_systole = self.inner_diastole;
        self.outer_systole = self.outer_diastole;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(format!("phantom: {msg}")));
        let d = self.dims;
        if d.as_array().contains(&0) {
            return bad(format!("extents must be positive, got {:?}", d.as_array()));
        }
        if d.t < 4 {
            return bad(format!("need at least 4 frames, got {}", d.t));
        }
        let limit = d.y.min(d.x) as f64 / 2.0;
        for (phase, inner, outer) in [
            ("diastolic", self.inner_diastole, self.outer_diastole),
            ("systolic", self.inner_systole, self.outer_systole),
        ] {
            if !(0.0 < inner && inner < outer && outer < limit) {
                return bad(format!("{phase} radii must satisfy 0 < {inner} < {outer} < {limit}"));
            }
        }
        if self.inner_systole > self.inner_diastole || self.outer_systole > self.outer_diastole {
            return bad("systolic radii must not exceed diastolic radii".into());
        }
        if !(0.0..1.0).contains(&self.taper) {
            return bad(format!("taper must lie in [0, 1), got {}", self.taper));
        }
        if !(self.noise >= 0.0 && self.texture >= 0.0) {
            return bad("noise and texture amplitudes must be >= 0".into());
        }
        Ok(())
    }

    /// Contraction phase in `[0, 1]`: 0 at end-diastole, 1 at end-systole.
    pub fn phase(&self, t: usize) -> f64 {
        (1.0 - (2.0 * PI * t as f64 / self.dims.t as f64).cos()) / 2.0
    }

    fn taper_factor(&self, z: usize) -> f64 {
        1.0 - self.taper * (z as f64 - self.center.z) / self.dims.z as f64
    }

    /// Instantaneous `(inner, outer)` ring radii at frame `t`, slice `z`.
    pub fn radii(&self, t: usize, z: usize) -> (f64, f64) {
        let s = self.phase(t);
        let f = self.taper_factor(z);
        let inner = self.inner_diastole + (self.inner_systole - self.inner_diastole) * s;
        let outer = self.outer_diastole + (self.outer_systole - self.outer_diastole) * s;
        (inner * f, outer * f)
    }

    /// In-plane distance of voxel `(y, x)` from the ring axis.
    pub fn radial_distance(&self, y: usize, x: usize) -> f64 {
        let dx = x as f64 - self.center.x;
        let dy = y as f64 - self.center.y;
        (dx * dx + dy * dy).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhantomOutput {
    pub volume: Volume4D,
    /// Myocardium labels for every frame.
    pub mask: Mask4D,
    pub center: Coord,
}

pub fn generate(spec: &PhantomSpec) -> Result<PhantomOutput> {
    spec.validate()?;
    let d = spec.dims;
    let plane = d.y * d.x;
    let planes: Vec<usize> = (0..d.t * d.z).collect();
    let rendered = par::map_collect(&planes, |&p| {
        let (t, z) = (p / d.z, p % d.z);
        let (inner, outer) = spec.radii(t, z);
        let mut rng = (spec.noise > 0.0).then(|| {
            let mut r = ChaCha8Rng::seed_from_u64(spec.seed);
            r.set_stream(p as u64);
            r
        });
        let mut values = Vec::with_capacity(plane);
        let mut labels = Vec::with_capacity(plane);
        for y in 0..d.y {
            for x in 0..d.x {
                let rho = spec.radial_distance(y, x);
                let (v, myo) = if rho < inner {
                    (spec.blood, false)
                } else if rho < outer {
                    (spec.myocardium, true)
                } else {
                    let pattern = 0.5 * ((0.9 * x as f64).sin() + (0.7 * y as f64).cos());
                    (spec.background + spec.texture * pattern as f32, false)
                };
                let n = match rng.as_mut() {
                    Some(r) => spec.noise * (2.0 * r.random::<f32>() - 1.0),
                    None => 0.0,
                };
                values.push(v + n);
                labels.push(myo);
            }
        }
        (values, labels)
    });
    let mut data = Vec::with_capacity(d.len());
    let mut mask = Vec::with_capacity(d.len());
    for (v, m) in rendered {
        data.extend(v);
        mask.extend(m);
    }
    Ok(PhantomOutput {
        volume: Volume4D::new(d, spec.spacing, data)?,
        mask: Mask4D::new(d, mask)?,
        center: spec.center,
    })
}
