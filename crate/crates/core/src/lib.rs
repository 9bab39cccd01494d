//! Rhythm analysis for multi-track audio.
//!
//! This crate measures two things about stem-separated music: how steady the
//! pulse is inside each track, and how tightly the tracks lock to each other.
//! It covers the full path from raw samples to aggregate numbers:
//!
//! - [`audio`]: clip representation, band-limited resampling, segmentation,
//!   and stem mixing.
//! - [`dsp`]: log-mel spectrograms and a spectral-flux onset envelope.
//! - [`tracker`]: autocorrelation tempo estimation and dynamic-programming
//!   beat tracking with a tempo-smoothness penalty.
//! - [`metrics`]: the three rhythm metrics computed from beat sequences —
//!   inter-beat-interval stability (IRS), windowed cross-track beat
//!   synchronization (CBS), and normalized cross-track beat dispersion (CBD).
//! - [`synth`]: a deterministic click-track generator that produces audio
//!   together with exact ground-truth beat annotations, used to verify both
//!   the tracker and the metrics.
//! - [`pipeline`]: the audio-to-beats convenience path.
//!
//! The metrics operate on [`tracker::BeatSequence`] values and do not care
//! whether those came from the tracker or from annotation files, so metric
//! correctness can be tested independently of tracker accuracy.
//!
//! The crate is `no_std`-compatible (requires `alloc`); disable the default
//! `std` feature for embedded or sandboxed use. All operations are pure
//! functions over immutable inputs and are safe to call concurrently.

#![cfg_attr(not(feature = "std"), no_std)]
#![warn(missing_docs)]
// Validations use `!(x > 0.0)` so that NaN fails them too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod audio;
pub mod dsp;
pub mod metrics;
pub mod pipeline;
pub mod synth;
pub mod tracker;

pub use audio::AudioClip;
pub use dsp::{OnsetEnvelope, Spectrogram, SpectrogramConfig};
pub use metrics::{MetricsConfig, MultiTrackSample};
pub use pipeline::PipelineConfig;
pub use synth::SynthSpec;
pub use tracker::{BeatSequence, TempoEstimate, TrackerConfig};
