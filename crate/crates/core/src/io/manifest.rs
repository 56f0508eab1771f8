//! Per-run record of proposed regions, keyed by a digest of the
//! configuration that produced them.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::focus::{FocusConfig, FocusFallback, FocusResult};
use crate::roi::{RoiBox, RoiConfig};
use crate::tensor::{Coord, Dims4};

/// Everything that influences the numbers in a manifest.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub focus: FocusConfig,
    pub roi: RoiConfig,
}

impl RunConfig {
    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config always serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoiRecord {
    pub source: String,
    pub dims: Dims4,
    pub roi: RoiBox,
    pub center: Coord,
    pub scale: f64,
    pub threshold: f32,
    pub fallback: Option<FocusFallback>,
}

impl RoiRecord {
    pub fn new(source: impl Into<String>, dims: Dims4, f: &FocusResult, roi: RoiBox) -> Self {
        RoiRecord {
            source: source.into(),
            dims,
            roi,
            center: f.center,
            scale: f.scale,
            threshold: f.threshold,
            fallback: f.fallback,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoiManifest {
    pub config_digest: String,
    pub config: RunConfig,
    pub records: Vec<RoiRecord>,
}

impl RoiManifest {
    pub fn new(config: RunConfig, records: Vec<RoiRecord>) -> Self {
        RoiManifest { config_digest: config.digest(), config, records }
    }

    /// Checks the digest and every record's box against its source dims.
    pub fn validate(&self) -> Result<()> {
        if self.config.digest() != self.config_digest {
            return Err(Error::Manifest("config digest does not match recorded config".into()));
        }
        for r in &self.records {
            if r.roi.source != r.dims.spatial() {
                return Err(Error::Manifest(format!("{}: box source dims disagree with record dims", r.source)));
            }
            RoiBox::new(r.roi.lo, r.roi.hi, r.roi.source, r.roi.target)
                .map_err(|e| Error::Manifest(format!("{}: {e}", r.source)))?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::file(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        let m: RoiManifest = serde_json::from_str(&text)?;
        m.validate()?;
        Ok(m)
    }
}
