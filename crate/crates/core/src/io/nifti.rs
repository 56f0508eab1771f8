//! Single-file NIfTI-1 (`.nii`, optionally gzip-compressed) for the element
//! types cardiac cine datasets ship with: `int16`, `uint16` and `float32`.
//!
//! On-disk order is x fastest, then y, z, t, which is exactly the internal
//! row-major `(t, z, y, x)` layout, so no data shuffling is needed.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

use crate::error::{Error, NiftiError, Result};
use crate::tensor::{Dims4, Spacing, Volume4D};

pub const HEADER_SIZE: usize = 348;
/// Header plus the 4-byte extension flag.
pub const DEFAULT_VOX_OFFSET: usize = 352;

pub const DT_INT16: i16 = 4;
pub const DT_FLOAT32: i16 = 16;
pub const DT_UINT16: i16 = 512;

const MAGIC: [u8; 4] = *b"n+1\0";
/// Spatial units mm (2) combined with temporal units seconds (8).
const XYZT_UNITS: u8 = 2 | 8;

/// The header fields this reader consumes.
#[derive(Clone, Debug, PartialEq)]
pub struct NiftiHeader {
    pub dim: [i16; 8],
    pub datatype: i16,
    pub bitpix: i16,
    pub pixdim: [f32; 8],
    pub vox_offset: f32,
    pub scl_slope: f32,
    pub scl_inter: f32,
    pub magic: [u8; 4],
    pub little_endian: bool,
}

impl NiftiHeader {
    /// Float32 header for a `(t, z, y, x)` volume.
    pub fn for_volume(dims: Dims4, spacing: Spacing) -> Self {
        let d = |n: usize| n as i16;
        NiftiHeader {
            dim: [4, d(dims.x), d(dims.y), d(dims.z), d(dims.t), 1, 1, 1],
            datatype: DT_FLOAT32,
            bitpix: 32,
            pixdim: [1.0, spacing.x, spacing.y, spacing.z, spacing.t, 0.0, 0.0, 0.0],
            vox_offset: DEFAULT_VOX_OFFSET as f32,
            scl_slope: 0.0,
            scl_inter: 0.0,
            magic: MAGIC,
            little_endian: true,
        }
    }

    pub fn to_bytes(&self) -> [u8; HEADER_SIZE] {
        let mut b = [0u8; HEADER_SIZE];
        let le = self.little_endian;
        let put_i32 = |b: &mut [u8], off: usize, v: i32| {
            b[off..off + 4].copy_from_slice(&if le { v.to_le_bytes() } else { v.to_be_bytes() })
        };
        let put_i16 = |b: &mut [u8], off: usize, v: i16| {
            b[off..off + 2].copy_from_slice(&if le { v.to_le_bytes() } else { v.to_be_bytes() })
        };
        let put_f32 = |b: &mut [u8], off: usize, v: f32| {
            b[off..off + 4].copy_from_slice(&if le { v.to_le_bytes() } else { v.to_be_bytes() })
        };
        put_i32(&mut b, 0, HEADER_SIZE as i32);
        for (i, &d) in self.dim.iter().enumerate() {
            put_i16(&mut b, 40 + 2 * i, d);
        }
        put_i16(&mut b, 70, self.datatype);
        put_i16(&mut b, 72, self.bitpix);
        for (i, &p) in self.pixdim.iter().enumerate() {
            put_f32(&mut b, 76 + 4 * i, p);
        }
        put_f32(&mut b, 108, self.vox_offset);
        put_f32(&mut b, 112, self.scl_slope);
        put_f32(&mut b, 116, self.scl_inter);
        b[123] = XYZT_UNITS;
        b[344..348].copy_from_slice(&self.magic);
        b
    }

    pub fn parse(bytes: &[u8]) -> Result<Self, NiftiError> {
        if bytes.len() < HEADER_SIZE {
            return Err(NiftiError::Truncated { expected: HEADER_SIZE, found: bytes.len() });
        }
        let raw = [bytes[0], bytes[1], bytes[2], bytes[3]];
        let little_endian = match (i32::from_le_bytes(raw), i32::from_be_bytes(raw)) {
            (348, _) => true,
            (_, 348) => false,
            (v, _) => return Err(NiftiError::HeaderSize(v)),
        };
        let i16_at = |off: usize| {
            let r = [bytes[off], bytes[off + 1]];
            if little_endian { i16::from_le_bytes(r) } else { i16::from_be_bytes(r) }
        };
        let f32_at = |off: usize| {
            let r = [bytes[off], bytes[off + 1], bytes[off + 2], bytes[off + 3]];
            if little_endian { f32::from_le_bytes(r) } else { f32::from_be_bytes(r) }
        };
        let mut magic = [0u8; 4];
        magic.copy_from_slice(&bytes[344..348]);
        if magic != MAGIC {
            return Err(NiftiError::Magic(magic));
        }
        let mut dim = [0i16; 8];
        for (i, d) in dim.iter_mut().enumerate() {
            *d = i16_at(40 + 2 * i);
        }
        let mut pixdim = [0f32; 8];
        for (i, p) in pixdim.iter_mut().enumerate() {
            *p = f32_at(76 + 4 * i);
        }
        Ok(NiftiHeader {
            dim,
            datatype: i16_at(70),
            bitpix: i16_at(72),
            pixdim,
            vox_offset: f32_at(108),
            scl_slope: f32_at(112),
            scl_inter: f32_at(116),
            magic,
            little_endian,
        })
    }

    /// Extents as `(t, z, y, x)`. Axes past `dim[0]` count as 1; axes five
    /// and up must be singleton.
    pub fn dims(&self) -> Result<Dims4, NiftiError> {
        let n = self.dim[0];
        if !(1..=7).contains(&n) {
            return Err(NiftiError::Dims(self.dim));
        }
        let n = n as usize;
        let ext = |i: usize| if i <= n { self.dim[i] } else { 1 };
        if (1..=n).any(|i| self.dim[i] < 1) || (5..=n).any(|i| self.dim[i] != 1) {
            return Err(NiftiError::Dims(self.dim));
        }
        Ok(Dims4::new(ext(4) as usize, ext(3) as usize, ext(2) as usize, ext(1) as usize))
    }

    /// Voxel sizes; unset or invalid entries default to 1.
    pub fn spacing(&self) -> Spacing {
        let s = |i: usize| {
            let v = self.pixdim[i].abs();
            if v.is_finite() && v > 0.0 { v } else { 1.0 }
        };
        Spacing { t: s(4), z: s(3), y: s(2), x: s(1) }
    }

    fn element_size(&self) -> Result<usize, NiftiError> {
        match self.datatype {
            DT_INT16 | DT_UINT16 => Ok(2),
            DT_FLOAT32 => Ok(4),
            other => Err(NiftiError::Datatype(other)),
        }
    }
}

fn is_gzip(bytes: &[u8]) -> bool {
    bytes.len() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b
}

/// Decodes a complete in-memory `.nii` (or gzipped `.nii.gz`) image.
pub fn decode_nifti(bytes: &[u8]) -> Result<Volume4D> {
    let owned;
    let bytes = if is_gzip(bytes) {
        let mut out = Vec::new();
        GzDecoder::new(bytes).read_to_end(&mut out)?;
        owned = out;
        &owned[..]
    } else {
        bytes
    };
    let h = NiftiHeader::parse(bytes)?;
    let dims = h.dims()?;
    let size = h.element_size()?;
    let offset = (h.vox_offset.max(0.0) as usize).max(HEADER_SIZE);
    let expected = offset + dims.len() * size;
    if bytes.len() < expected {
        return Err(NiftiError::Truncated { expected, found: bytes.len() }.into());
    }
    let payload = &bytes[offset..expected];
    let le = h.little_endian;
    let mut data: Vec<f32> = match h.datatype {
        DT_INT16 => payload
            .chunks_exact(2)
            .map(|c| if le { i16::from_le_bytes([c[0], c[1]]) } else { i16::from_be_bytes([c[0], c[1]]) } as f32)
            .collect(),
        DT_UINT16 => payload
            .chunks_exact(2)
            .map(|c| if le { u16::from_le_bytes([c[0], c[1]]) } else { u16::from_be_bytes([c[0], c[1]]) } as f32)
            .collect(),
        _ => payload
            .chunks_exact(4)
            .map(|c| {
                let r = [c[0], c[1], c[2], c[3]];
                if le { f32::from_le_bytes(r) } else { f32::from_be_bytes(r) }
            })
            .collect(),
    };
    if h.scl_slope != 0.0 && h.scl_slope.is_finite() {
        let (m, b) = (h.scl_slope, h.scl_inter);
        data.iter_mut().for_each(|v| *v = *v * m + b);
    }
    Volume4D::new(dims, h.spacing(), data)
}

pub fn read_nifti(path: impl AsRef<Path>) -> Result<Volume4D> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::file(path, e))?;
    decode_nifti(&bytes)
}

/// Header, extension flag and raw payload as one byte buffer.
pub fn encode_nifti(header: &NiftiHeader, payload: &[u8]) -> Vec<u8> {
    let offset = (header.vox_offset as usize).max(DEFAULT_VOX_OFFSET);
    let mut out = Vec::with_capacity(offset + payload.len());
    out.extend_from_slice(&header.to_bytes());
    out.resize(offset, 0);
    out.extend_from_slice(payload);
    out
}

/// Writes a float32 image; a `.gz` suffix selects gzip compression.
pub fn write_nifti(path: impl AsRef<Path>, v: &Volume4D) -> Result<()> {
    let header = NiftiHeader::for_volume(v.dims(), v.spacing());
    let payload: Vec<u8> = v.data().iter().flat_map(|x| x.to_le_bytes()).collect();
    write_nifti_raw(path, &header, &payload)
}

pub fn write_nifti_raw(path: impl AsRef<Path>, header: &NiftiHeader, payload: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_nifti(header, payload);
    let gz = path.extension().is_some_and(|e| e == "gz");
    let file = File::create(path).map_err(|e| Error::file(path, e))?;
    if gz {
        let mut enc = GzEncoder::new(file, Compression::default());
        enc.write_all(&bytes)?;
        enc.finish()?;
    } else {
        let mut file = file;
        file.write_all(&bytes)?;
    }
    Ok(())
}

pub fn is_nifti_path(path: &Path) -> bool {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
    name.ends_with(".nii") || name.ends_with(".nii.gz")
}
