//! Monte-Carlo estimation of kernel statistics and parameter sweeps.

pub mod config;
pub mod ensemble;
pub mod estimator;
pub mod report;
pub mod sweep;

pub use config::{EstimateConfig, Pooling, SamplingMode};
pub use ensemble::{estimate_covariance, estimate_kernel_stats, kernel_samples};
pub use estimator::{separation, MeanEstimate};
pub use report::{write_rows, EstimateReport, ReportRow};
pub use sweep::{gram_study, sweep, GramRow, GramStudyConfig, SweepKind, SweepRow};
