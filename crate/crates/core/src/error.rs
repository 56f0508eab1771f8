use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimMismatch { expected: Vec<usize>, found: Vec<usize> },

    #[error("non-finite value at flat index {index}")]
    NonFinite { index: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("kernel extent {kernel} exceeds volume extent {extent} on axis {axis}")]
    KernelTooLarge { axis: usize, kernel: usize, extent: usize },

    #[error("total energy is zero; no focus can be derived")]
    DegenerateEnergy,

    #[error("threshold mask is empty; scale is undefined")]
    EmptyMask,

    #[error("region of interest collapsed to zero extent on axis {axis}")]
    ZeroExtent { axis: usize },

    #[error("box {lo:?}..{hi:?} out of bounds for dims {dims:?}")]
    OutOfBounds { lo: [usize; 3], hi: [usize; 3], dims: [usize; 3] },

    #[error("nifti: {0}")]
    Nifti(#[from] NiftiError),

    #[error("container: {0}")]
    Container(String),

    #[error("manifest: {0}")]
    Manifest(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Parse failures for NIfTI-1 input, one variant per failure class.
#[derive(Debug, Error)]
pub enum NiftiError {
    #[error("sizeof_hdr is {0}, expected 348")]
    HeaderSize(i32),

    #[error("bad magic {0:?}, expected \"n+1\"")]
    Magic([u8; 4]),

    #[error("unsupported datatype code {0}")]
    Datatype(i16),

    #[error("truncated payload: need {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("invalid dimensions {0:?}")]
    Dims([i16; 8]),
}

impl Error {
    pub(crate) fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::File { path: path.into(), source }
    }
}
