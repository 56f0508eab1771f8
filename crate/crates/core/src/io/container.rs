//! Minimal tensor container: a short text header followed by raw
//! little-endian `f32` values in row-major order.
//!
//! ```text
//! cardiofocus-tensor 1
//! axes t,z,y,x
//! dims 12 8 64 64
//! dtype f32le
//! spacing 1 8 1.5 1.5
//! end
//! <payload>
//! ```
//!
//! Three-dimensional maps use `axes z,y,x` and omit `spacing`. Masks are
//! stored as 0.0/1.0 values.

use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::{Dims3, Dims4, Mask4D, Spacing, Volume3D, Volume4D};

const MAGIC_LINE: &str = "cardiofocus-tensor 1";
const END_LINE: &str = "end";
const MAX_HEADER: usize = 4096;

/// Parsed container contents before shape-specific validation.
#[derive(Clone, Debug, PartialEq)]
pub struct Container {
    pub axes: Vec<String>,
    pub dims: Vec<usize>,
    pub spacing: Option<Vec<f32>>,
    pub values: Vec<f32>,
}

impl Container {
    pub fn encode(&self) -> Vec<u8> {
        let mut header = format!("{MAGIC_LINE}\naxes {}\ndims", self.axes.join(","));
        for d in &self.dims {
            header.push_str(&format!(" {d}"));
        }
        header.push_str("\ndtype f32le\n");
        if let Some(sp) = &self.spacing {
            header.push_str("spacing");
            for s in sp {
                header.push_str(&format!(" {s}"));
            }
            header.push('\n');
        }
        header.push_str(END_LINE);
        header.push('\n');
        let mut out = header.into_bytes();
        out.reserve(self.values.len() * 4);
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let bad = |msg: String| Error::Container(msg);
        let window = &bytes[..bytes.len().min(MAX_HEADER)];
        let text_end = find_header_end(window).ok_or_else(|| bad("header terminator not found".into()))?;
        let header = std::str::from_utf8(&bytes[..text_end]).map_err(|_| bad("header is not UTF-8".into()))?;
        let mut lines = header.lines();
        if lines.next() != Some(MAGIC_LINE) {
            return Err(bad("missing magic line".into()));
        }
        let (mut axes, mut dims, mut spacing, mut dtype) = (None, None, None, None);
        for line in lines {
            if line == END_LINE {
                break;
            }
            let (key, rest) = line.split_once(' ').ok_or_else(|| bad(format!("malformed line {line:?}")))?;
            match key {
                "axes" => axes = Some(rest.split(',').map(str::to_string).collect::<Vec<_>>()),
                "dims" => {
                    let d = rest
                        .split_whitespace()
                        .map(|s| s.parse::<usize>().map_err(|_| bad(format!("bad extent {s:?}"))))
                        .collect::<Result<Vec<_>>>()?;
                    dims = Some(d);
                }
                "spacing" => {
                    let s = rest
                        .split_whitespace()
                        .map(|s| s.parse::<f32>().map_err(|_| bad(format!("bad spacing {s:?}"))))
                        .collect::<Result<Vec<_>>>()?;
                    spacing = Some(s);
                }
                "dtype" => dtype = Some(rest.to_string()),
                other => return Err(bad(format!("unknown header key {other:?}"))),
            }
        }
        let axes = axes.ok_or_else(|| bad("missing axes".into()))?;
        let dims = dims.ok_or_else(|| bad("missing dims".into()))?;
        if dtype.as_deref() != Some("f32le") {
            return Err(bad(format!("unsupported dtype {dtype:?}")));
        }
        if axes.len() != dims.len() || dims.contains(&0) {
            return Err(bad(format!("axes {axes:?} do not match dims {dims:?}")));
        }
        let n: usize = dims.iter().product();
        let payload = &bytes[text_end..];
        if payload.len() != n * 4 {
            return Err(bad(format!("payload has {} bytes, dims {dims:?} need {}", payload.len(), n * 4)));
        }
        let values = payload.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
        Ok(Container { axes, dims, spacing, values })
    }

    fn expect_axes(&self, axes: &str) -> Result<()> {
        if self.axes.join(",") != axes {
            return Err(Error::Container(format!("expected axes {axes}, found {}", self.axes.join(","))));
        }
        Ok(())
    }
}

/// Byte offset just past the `end\n` line.
fn find_header_end(bytes: &[u8]) -> Option<usize> {
    let needle = b"\nend\n";
    bytes.windows(needle.len()).position(|w| w == needle).map(|p| p + needle.len())
}

impl From<&Volume4D> for Container {
    fn from(v: &Volume4D) -> Self {
        Container {
            axes: ["t", "z", "y", "x"].map(String::from).to_vec(),
            dims: v.dims().as_array().to_vec(),
            spacing: Some(v.spacing().as_array().to_vec()),
            values: v.data().to_vec(),
        }
    }
}

impl From<&Volume3D> for Container {
    fn from(v: &Volume3D) -> Self {
        Container {
            axes: ["z", "y", "x"].map(String::from).to_vec(),
            dims: v.dims().as_array().to_vec(),
            spacing: None,
            values: v.data().to_vec(),
        }
    }
}

impl TryFrom<Container> for Volume4D {
    type Error = Error;

    fn try_from(c: Container) -> Result<Self> {
        c.expect_axes("t,z,y,x")?;
        let spacing = match c.spacing.as_deref() {
            Some(&[t, z, y, x]) => Spacing { t, z, y, x },
            None => Spacing::default(),
            Some(other) => return Err(Error::Container(format!("spacing needs 4 values, got {}", other.len()))),
        };
        let d = &c.dims;
        Volume4D::new(Dims4::new(d[0], d[1], d[2], d[3]), spacing, c.values)
    }
}

impl TryFrom<Container> for Volume3D {
    type Error = Error;

    fn try_from(c: Container) -> Result<Self> {
        c.expect_axes("z,y,x")?;
        let d = &c.dims;
        Volume3D::new(Dims3::new(d[0], d[1], d[2]), c.values)
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::file(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::file(path, e))
}

pub fn write_container(path: impl AsRef<Path>, c: &Container) -> Result<()> {
    write_bytes(path.as_ref(), &c.encode())
}

pub fn read_container(path: impl AsRef<Path>) -> Result<Container> {
    Container::decode(&read_bytes(path.as_ref())?)
}

pub fn write_volume4(path: impl AsRef<Path>, v: &Volume4D) -> Result<()> {
    write_container(path, &Container::from(v))
}

pub fn read_volume4(path: impl AsRef<Path>) -> Result<Volume4D> {
    read_container(path)?.try_into()
}

pub fn write_volume3(path: impl AsRef<Path>, v: &Volume3D) -> Result<()> {
    write_container(path, &Container::from(v))
}

pub fn read_volume3(path: impl AsRef<Path>) -> Result<Volume3D> {
    read_container(path)?.try_into()
}

pub fn write_mask4(path: impl AsRef<Path>, m: &Mask4D, spacing: Spacing) -> Result<()> {
    write_volume4(path, &m.to_volume(spacing))
}
