//! Audio-to-beats convenience path.
//!
//! The envelope is always computed at the spectrogram's native hop (160
//! samples at 16 kHz gives exactly 100 fps) and then resampled to the
//! tracker's requested frame rate, so the effective fps is the exact value
//! used in every conversion back to seconds.

use crate::audio::AudioClip;
use crate::dsp::{self, DspError, SpectrogramConfig};
use crate::tracker::{self, BeatSequence, TempoEstimate, TrackerConfig, TrackerError};

/// Errors from the combined audio-to-beats path.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    /// The spectrogram / onset stage failed.
    #[error(transparent)]
    Dsp(#[from] DspError),
    /// Tempo estimation or beat tracking failed.
    #[error(transparent)]
    Tracker(#[from] TrackerError),
}

/// Everything needed to turn one clip into beats.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PipelineConfig {
    /// STFT and mel filterbank parameters.
    pub spectrogram: SpectrogramConfig,
    /// Tempo search and beat-tracking parameters.
    pub tracker: TrackerConfig,
}

/// Tracks one clip end to end: log-mel, onset envelope, envelope resample
/// to `tracker.fps`, tempo estimate, beat extraction.
pub fn track_clip(clip: &AudioClip, cfg: &PipelineConfig) -> Result<BeatSequence, PipelineError> {
    let (beats, _) = track_clip_with_tempo(clip, cfg)?;
    Ok(beats)
}

/// [`track_clip`], also returning the tempo estimate it used.
pub fn track_clip_with_tempo(
    clip: &AudioClip,
    cfg: &PipelineConfig,
) -> Result<(BeatSequence, TempoEstimate), PipelineError> {
    let spec = dsp::stft_mel(clip, &cfg.spectrogram)?;
    let env = dsp::onset_envelope(&spec)?;
    let env = dsp::resample_envelope(&env, cfg.tracker.fps)?;
    let tempo = tracker::estimate_tempo(&env, &cfg.tracker)?;
    let beats = tracker::track_beats(&env, &tempo, &cfg.tracker)?;
    Ok((beats, tempo))
}
