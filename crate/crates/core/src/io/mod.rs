//! File formats: NIfTI-1 input, the native tensor container, PGM heatmaps
//! and JSON manifests.

mod container;
mod heatmap;
mod manifest;
pub mod nifti;

use std::path::Path;

pub use container::{
    read_container, read_volume3, read_volume4, write_container, write_mask4, write_volume3, write_volume4, Container,
};
pub use heatmap::{encode_heatmap, write_heatmap};
pub use manifest::{RoiManifest, RoiRecord, RunConfig};
pub use nifti::{read_nifti, write_nifti};

use crate::error::Result;
use crate::tensor::{Mask4D, Volume4D};

/// Reads a sequence from either NIfTI (`.nii`, `.nii.gz`) or the container
/// format, chosen by file name.
pub fn read_sequence(path: impl AsRef<Path>) -> Result<Volume4D> {
    let path = path.as_ref();
    if nifti::is_nifti_path(path) {
        read_nifti(path)
    } else {
        read_volume4(path)
    }
}

/// Reads a label or prediction; any nonzero voxel is set.
pub fn read_mask(path: impl AsRef<Path>) -> Result<Mask4D> {
    Ok(Mask4D::from_volume(&read_sequence(path)?))
}
