//! Batch evaluation harness and CLI around [`rhythmeter_core`].
//!
//! The core crate holds the pure analysis (beat tracking and the rhythm
//! metrics); this crate adds what touches the outside world: WAV decoding,
//! dataset walking, ground-truth annotation files, report emission, the
//! hyperparameter sweep with ranking-stability checks, and the `rhythmeter`
//! binary itself.

pub mod dataset;
pub mod evaluate;
pub mod report;
pub mod sweep;
pub mod wav;

pub use dataset::{scan_dataset, SampleDescriptor, DEFAULT_TRACKS};
pub use evaluate::{evaluate, EvalOptions};
pub use report::{BeatsSource, MetricsReport, ReportFormat};
pub use sweep::{default_grid, rank_consistency, sweep, GridSetting, RankMetric, SweepReport};
