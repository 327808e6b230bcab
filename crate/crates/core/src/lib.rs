//! Eye-tracking analysis for cinematic video.
//!
//! The pipeline runs from raw gaze exports to per-frame fixation maps
//! ([`ingest`]), Gaussian saliency maps ([`saliency`]), saliency metrics
//! ([`metrics`]), inter-observer congruency ([`ioc`]), editing annotations
//! ([`annotations`]) and the statistics and benchmark reports built on top
//! of them ([`stats`], [`bench`]).
//!
//! Grids and metrics are generic over the floating point type; the aliases
//! at the crate root fix the common `f64` and `f32` instantiations.

pub mod annotations;
pub mod bench;
pub mod config;
pub mod error;
pub mod ingest;
pub mod ioc;
pub mod mapio;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod saliency;
pub mod scalar;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Double precision saliency map, the default for analysis.
pub type SaliencyMap = model::Heatmap<f64>;
/// Single precision saliency map, matching the raw float grid file format.
pub type SaliencyMapF32 = model::Heatmap<f32>;
/// Double precision Gaussian kernel.
pub type GaussianKernel = saliency::Kernel<f64>;
/// Single precision Gaussian kernel.
pub type GaussianKernelF32 = saliency::Kernel<f32>;

/// Crate version echoed in report headers.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
