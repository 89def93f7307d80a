//! Learning-free color constancy.
//!
//! Estimates the RGB direction of a scene's illuminant from a single image
//! and divides it out. The estimators are the classic Gray-World family
//! (Gray World, White Patch, Shades of Gray, General Gray World, first- and
//! second-order Gray Edge), the Bright Pixels baseline, and a fast
//! patch-wise bright-pixel method that spreads a highlight-selection budget
//! across image patches in proportion to their brightness. Equidistant
//! center-pixel downsampling makes every estimator cheap enough for
//! real-time use.
//!
//! The [`harness`] module adds dataset manifests, batch evaluation with the
//! standard angular-error statistics, parameter grid search, downsampling
//! sweeps, and timing benchmarks; [`synth`] generates seeded scenes with
//! exactly known illuminants for testing without a dataset.

pub mod downsample;
mod error;
pub mod estimators;
pub mod eval;
pub mod harness;
pub mod imaging;
pub mod io;
pub mod pbp;
pub mod synth;

pub use error::{Error, Result};
pub use estimators::{GrayFrameworkParams, MinkowskiOrder, PixelSelection};
pub use eval::{angular_error_deg, error_stats, ErrorStats};
pub use imaging::{IlluminantEstimate, LinearImage, PreprocessConfig};
pub use pbp::{PbpAnalysis, PbpParams};
