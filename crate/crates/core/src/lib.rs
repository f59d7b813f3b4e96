//! Radial Gaussianization of sample sets.
//!
//! Chi-distribution special functions, synthetic 2D benchmarks, VCReg and
//! radial losses with exact gradients, gradient descent over sample points,
//! whitening/radial pushforward maps and distribution-distance diagnostics.

pub mod distributions;
pub mod error;
pub mod losses;
pub mod maps;
pub mod metrics;
pub mod optimizer;
pub mod rng;
pub mod sample;
pub mod special;

pub use distributions::{DistTag, Distribution, MixtureSpec, Sunshine, XDistribution};
pub use error::{Error, Result};
pub use losses::{LossConfig, LossReport, MSpacing};
pub use maps::{apply_map, fit_map, MapKind, PushforwardMap};
pub use metrics::MetricReport;
pub use optimizer::{optimize_samples, OptimizeOptions, ScheduleConfig, Trajectory, TrajectoryRecord};
pub use sample::SampleSet;
pub use special::ChiModel;
