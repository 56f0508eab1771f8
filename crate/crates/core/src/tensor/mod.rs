//! Dense volume containers and the numeric primitives the pipeline shares:
//! intensity normalization, small-kernel convolution, order statistics and
//! element-wise powers.
//!
//! Values are stored as `f32`; reductions accumulate in `f64`.

mod convolve;
mod stats;
mod volume;

pub(crate) use convolve::convolve3_padded;
pub use convolve::{convolve3, convolve4, convolve_axis, gaussian_taps, Boundary, Kernel};
pub use stats::{hadamard_pow, normalize, normalize3, quantile, rescale_unit, DEFAULT_EPSILON};
pub use volume::{Coord, Dims3, Dims4, Mask3D, Mask4D, Spacing, Volume3D, Volume4D};
