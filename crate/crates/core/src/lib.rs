//! Kernel-based visual tracking over color histograms.
//!
//! The crate is organized bottom-up:
//!
//! * [`imgproc`]: RGB images, PPM IO, region cropping and a deterministic
//!   synthetic sequence generator.
//! * [`histogram`]: spatial kernel profiles and kernel-weighted color
//!   histograms.
//! * [`ppk_svm`]: probability product kernels, the SVM decision function
//!   evaluated through a precomputed support-vector aggregate, SMO batch
//!   training and NORMA online updates.
//! * [`optimize`]: L-BFGS maximization and a fixed-point iteration driver.
//! * [`trackers`]: the generalized SVM-score tracker, standard and
//!   modified mean shift, and a color particle filter.
//! * [`global_seek`]: annealed bandwidth-cascade localization and 1-D mode
//!   counting.
//! * [`eval`]: center-error and failure-rate metrics.

pub mod error;
pub mod eval;
pub mod global_seek;
pub mod histogram;
pub mod imgproc;
pub mod optimize;
pub mod ppk_svm;
pub mod trackers;

pub use error::{Error, Result};
pub use histogram::{BinningScheme, Histogram, SpatialKernel};
pub use imgproc::{Image, Region, SequenceDataset};
pub use ppk_svm::{NormaConfig, PpkConfig, SvmModel, TrainConfig};

/// A point or extent in continuous image coordinates, `(x, y)`.
pub type Vec2 = [f64; 2];
