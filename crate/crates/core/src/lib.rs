//! Motion-driven localization of the heart in 4D cardiac MRI.
//!
//! The pipeline normalizes a `(t, z, y, x)` sequence, extracts static
//! appearance features and a temporal motion-energy map, fuses them into a
//! single energy field, and fits a Gaussian radial basis function around the
//! energy center. The fitted field defines an axis-aligned region of
//! interest that is cropped from every frame and rescaled to a
//! network-friendly shape.
//!
//! Everything is pure and deterministic. With the `parallel` feature (on by
//! default) per-slice work is spread over a rayon pool; results are
//! bit-identical to the sequential build.

pub mod cli;
pub mod error;
pub mod features;
pub mod focus;
pub mod io;
pub mod metrics;
pub mod par;
pub mod phantom;
pub mod roi;
pub mod tensor;

pub use error::{Error, Result};
pub use features::{FeatureConfig, FeatureMaps, StaticFrame, TemporalBoundary};
pub use focus::{FocusConfig, FocusFallback, FocusResult, FusionWeights};
pub use roi::{RoiBox, RoiConfig};
pub use tensor::{Boundary, Coord, Dims3, Dims4, Kernel, Mask3D, Mask4D, Spacing, Volume3D, Volume4D};
