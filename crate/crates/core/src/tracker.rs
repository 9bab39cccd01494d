//! Tempo estimation and dynamic-programming beat tracking.
//!
//! Tempo comes from the prior-weighted autocorrelation of the onset
//! envelope. Beats then come from a dynamic program that trades onset
//! strength against a tempo-smoothness penalty: candidate predecessors of a
//! beat at frame `t` lie between half and twice the beat period back, and
//! deviating from the period costs `lambda * ln(delta / period)^2`. The
//! `transition_lambda` weight is the knob that controls how strongly the
//! tracker smooths local timing irregularities; raising it yields steadier
//! (and eventually over-regularized) beat grids.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::dsp::OnsetEnvelope;

/// Envelope energy per frame below which a clip counts as silent.
const SILENCE_THRESHOLD: f64 = 1e-6;

/// Errors from tempo estimation and beat tracking.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrackerError {
    /// Envelope shorter than two periods of the slowest searchable tempo.
    #[error("envelope spans {duration:.3} s, need at least {required:.3} s")]
    EnvelopeTooShort {
        /// Envelope duration in seconds.
        duration: f64,
        /// Minimum duration for the configured tempo range.
        required: f64,
    },
    /// Tempo estimate lies outside the configured search range.
    #[error("tempo {bpm:.2} BPM outside configured range {min:.1}..{max:.1}")]
    TempoOutOfRange {
        /// Offending tempo in BPM.
        bpm: f64,
        /// Configured lower bound.
        min: f64,
        /// Configured upper bound.
        max: f64,
    },
    /// Configuration violates its invariants.
    #[error("invalid tracker config: {0}")]
    InvalidConfig(&'static str),
}

/// Violations of the beat-sequence invariants.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BeatSequenceError {
    /// Beat times must be strictly increasing.
    #[error("beat times not strictly increasing at index {0}")]
    NotIncreasing(usize),
    /// A beat lies before 0 or after the clip end.
    #[error("beat at {time} s outside clip of {clip_duration} s")]
    OutOfRange {
        /// Offending beat time in seconds.
        time: f64,
        /// Clip duration in seconds.
        clip_duration: f64,
    },
}

/// Beat-tracking parameters.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrackerConfig {
    /// Frame rate the onset envelope is analyzed at, in Hz.
    pub fps: f64,
    /// Weight of the tempo-smoothness penalty. Dimensionless, >= 0; scaled
    /// internally by the envelope mean so the same value behaves alike
    /// across loudness scales.
    pub transition_lambda: f64,
    /// Lower edge of the tempo search range in BPM.
    pub bpm_min: f64,
    /// Upper edge of the tempo search range in BPM.
    pub bpm_max: f64,
    /// Center of the log-normal tempo prior in BPM.
    pub tempo_prior_center: f64,
    /// Spread of the tempo prior in octaves.
    pub tempo_prior_spread: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            fps: 150.0,
            transition_lambda: 100.0,
            bpm_min: 55.0,
            bpm_max: 215.0,
            tempo_prior_center: 120.0,
            tempo_prior_spread: 1.0,
        }
    }
}

impl TrackerConfig {
    /// Checks the config invariants.
    pub fn validate(&self) -> Result<(), TrackerError> {
        if !(self.fps > 0.0) {
            return Err(TrackerError::InvalidConfig("fps must be positive"));
        }
        if !(self.transition_lambda >= 0.0) {
            return Err(TrackerError::InvalidConfig("transition_lambda must be >= 0"));
        }
        if !(self.bpm_min > 0.0 && self.bpm_min < self.bpm_max) {
            return Err(TrackerError::InvalidConfig("bpm range must satisfy 0 < min < max"));
        }
        if !(self.tempo_prior_center >= self.bpm_min && self.tempo_prior_center <= self.bpm_max) {
            return Err(TrackerError::InvalidConfig("tempo prior center outside bpm range"));
        }
        if !(self.tempo_prior_spread > 0.0) {
            return Err(TrackerError::InvalidConfig("tempo prior spread must be positive"));
        }
        Ok(())
    }
}

/// A global tempo estimate for one clip.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TempoEstimate {
    /// Estimated tempo in BPM, inside the configured search range.
    pub bpm: f64,
    /// Peak prominence of the chosen autocorrelation lag, in [0, 1].
    pub confidence: f64,
    /// True when the envelope was flat and the prior center was returned
    /// instead of a measurement.
    pub is_fallback: bool,
}

/// Strictly increasing beat times in seconds for one track of one clip.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BeatSequence {
    times: Vec<f64>,
    clip_duration: f64,
}

impl BeatSequence {
    /// Builds a sequence, checking order and range.
    pub fn new(times: Vec<f64>, clip_duration: f64) -> Result<Self, BeatSequenceError> {
        for (i, pair) in times.windows(2).enumerate() {
            if !(pair[0] < pair[1]) {
                return Err(BeatSequenceError::NotIncreasing(i + 1));
            }
        }
        if let (Some(&first), Some(&last)) = (times.first(), times.last()) {
            if !(first >= 0.0) || !(last <= clip_duration) {
                let time = if first < 0.0 { first } else { last };
                return Err(BeatSequenceError::OutOfRange { time, clip_duration });
            }
        }
        Ok(Self { times, clip_duration })
    }

    /// A sequence with no beats.
    pub fn empty(clip_duration: f64) -> Self {
        Self { times: Vec::new(), clip_duration }
    }

    /// Beat times in seconds.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Duration of the clip the beats belong to, in seconds.
    pub fn clip_duration(&self) -> f64 {
        self.clip_duration
    }

    /// Number of beats.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    /// True when the sequence holds no beats.
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Estimates the dominant tempo of an onset envelope.
///
/// The normalized autocorrelation of the mean-removed envelope is weighted
/// by a log-normal prior centered at `tempo_prior_center` (spread in
/// octaves) and maximized over lags inside the configured BPM range.
/// Confidence is the prominence of the winning peak over the median
/// autocorrelation in that range.
///
/// A flat envelope has no measurable tempo; the prior center is returned
/// with zero confidence and `is_fallback` set.
pub fn estimate_tempo(
    env: &OnsetEnvelope,
    cfg: &TrackerConfig,
) -> Result<TempoEstimate, TrackerError> {
    cfg.validate()?;
    let fps = env.fps;
    let n = env.values.len();
    let duration = n as f64 / fps;
    let required = 2.0 * 60.0 / cfg.bpm_min;
    if duration < required {
        return Err(TrackerError::EnvelopeTooShort { duration, required });
    }

    let first = env.values[0];
    if env.values.iter().all(|&v| v == first) {
        return Ok(TempoEstimate {
            bpm: cfg.tempo_prior_center,
            confidence: 0.0,
            is_fallback: true,
        });
    }

    let lag_min = (fps * 60.0 / cfg.bpm_max).ceil() as usize;
    let lag_max = ((fps * 60.0 / cfg.bpm_min).floor() as usize).min(n - 1);
    if lag_min == 0 || lag_min > lag_max {
        return Err(TrackerError::EnvelopeTooShort { duration, required });
    }

    let mean = env.values.iter().sum::<f64>() / n as f64;
    let x: Vec<f64> = env.values.iter().map(|v| v - mean).collect();
    let denom: f64 = x.iter().map(|v| v * v).sum();

    let center_lag = fps * 60.0 / cfg.tempo_prior_center;
    let mut ac = Vec::with_capacity(lag_max - lag_min + 1);
    let mut best_lag = lag_min;
    let mut best_score = f64::NEG_INFINITY;
    for lag in lag_min..=lag_max {
        let raw: f64 = (0..n - lag).map(|t| x[t] * x[t + lag]).sum();
        let corr = raw / denom;
        ac.push(corr);
        let octaves = (lag as f64 / center_lag).log2() / cfg.tempo_prior_spread;
        let prior = (-0.5 * octaves * octaves).exp();
        let score = corr * prior;
        if score > best_score {
            best_score = score;
            best_lag = lag;
        }
    }

    let mut sorted = ac.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = sorted[sorted.len() / 2];
    let peak = ac[best_lag - lag_min];
    let confidence = (peak - median).clamp(0.0, 1.0);

    Ok(TempoEstimate { bpm: 60.0 * fps / best_lag as f64, confidence, is_fallback: false })
}

/// Extracts the globally best beat sequence for a fixed tempo estimate.
///
/// Frame scores accumulate as `C(t) = O(t) + max(C(t') - penalty)` over
/// predecessors `t'` between half and twice the beat period back, with
/// `penalty = lambda * ln((t - t') / period)^2` and `lambda` equal to
/// `transition_lambda` times the envelope mean. Beats are read off by
/// backtracing from the global maximum; each frame index becomes `t / fps`
/// seconds. The predecessor window is additionally floored at the period of
/// `bpm_max`, so consecutive beats are never closer than `60 / bpm_max` s.
///
/// A silent envelope (total energy below 1e-6 per frame) produces an empty
/// sequence rather than an error.
pub fn track_beats(
    env: &OnsetEnvelope,
    tempo: &TempoEstimate,
    cfg: &TrackerConfig,
) -> Result<BeatSequence, TrackerError> {
    cfg.validate()?;
    if !(tempo.bpm >= cfg.bpm_min && tempo.bpm <= cfg.bpm_max) {
        return Err(TrackerError::TempoOutOfRange {
            bpm: tempo.bpm,
            min: cfg.bpm_min,
            max: cfg.bpm_max,
        });
    }

    let fps = env.fps;
    let n = env.values.len();
    let duration = n as f64 / fps;
    let total: f64 = env.values.iter().sum();
    if n == 0 || total < SILENCE_THRESHOLD * n as f64 {
        return Ok(BeatSequence::empty(duration));
    }

    let period = fps * 60.0 / tempo.bpm;
    let d_min = ((period / 2.0).ceil() as usize).max((fps * 60.0 / cfg.bpm_max).ceil() as usize);
    let d_max = ((2.0 * period).floor() as usize).max(d_min);
    let lambda = cfg.transition_lambda * (total / n as f64);

    let penalties: Vec<f64> = (d_min..=d_max)
        .map(|delta| {
            let dev = (delta as f64 / period).ln();
            lambda * dev * dev
        })
        .collect();

    let mut score = Vec::with_capacity(n);
    let mut parent: Vec<Option<usize>> = Vec::with_capacity(n);
    for t in 0..n {
        let mut best: Option<(f64, usize)> = None;
        if t >= d_min {
            let lo = t.saturating_sub(d_max);
            for prev in lo..=t - d_min {
                let cand: f64 = score[prev] - penalties[t - prev - d_min];
                if best.is_none_or(|(b, _)| cand > b) {
                    best = Some((cand, prev));
                }
            }
        }
        match best {
            Some((gain, prev)) => {
                score.push(env.values[t] + gain);
                parent.push(Some(prev));
            }
            None => {
                score.push(env.values[t]);
                parent.push(None);
            }
        }
    }

    // First occurrence of the global maximum keeps the result deterministic.
    let mut end = 0;
    for (t, &s) in score.iter().enumerate() {
        if s > score[end] {
            end = t;
        }
    }

    let mut frames = Vec::new();
    let mut cursor = Some(end);
    while let Some(t) = cursor {
        frames.push(t);
        cursor = parent[t];
    }
    frames.reverse();

    let times: Vec<f64> = frames.iter().map(|&t| t as f64 / fps).collect();
    Ok(BeatSequence::new(times, duration).expect("DP emits ordered in-range beats"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};
    use rand_xoshiro::Xoshiro256PlusPlus;

    /// Unit spikes at the given times on an otherwise-zero envelope.
    fn spike_envelope(times: &[f64], fps: f64, secs: f64) -> OnsetEnvelope {
        let n = (secs * fps).round() as usize;
        let mut values = vec![0.0f64; n];
        for &t in times {
            let idx = (t * fps).round() as usize;
            if idx < n {
                values[idx] = 1.0;
            }
        }
        OnsetEnvelope { values, fps }
    }

    fn click_times(bpm: f64, secs: f64) -> Vec<f64> {
        let period = 60.0 / bpm;
        (0..).map(|i| i as f64 * period).take_while(|&t| t < secs).collect()
    }

    #[test]
    fn tempo_of_click_train() {
        let env = spike_envelope(&click_times(120.0, 10.24), 100.0, 10.24);
        let est = estimate_tempo(&env, &TrackerConfig::default()).unwrap();
        assert!(!est.is_fallback);
        assert!((118.0..=122.0).contains(&est.bpm), "bpm {}", est.bpm);
        assert!(est.confidence > 0.0);
    }

    #[test]
    fn flat_envelope_falls_back_to_prior() {
        let env = OnsetEnvelope { values: vec![0.5; 1024], fps: 100.0 };
        let est = estimate_tempo(&env, &TrackerConfig::default()).unwrap();
        assert!(est.is_fallback);
        assert_eq!(est.bpm, 120.0);
        assert_eq!(est.confidence, 0.0);
    }

    #[test]
    fn prior_does_not_override_clear_peak() {
        // 90 BPM clicks with the default prior centered at 120.
        let env = spike_envelope(&click_times(90.0, 10.24), 100.0, 10.24);
        let est = estimate_tempo(&env, &TrackerConfig::default()).unwrap();
        assert!((88.0..=92.0).contains(&est.bpm), "bpm {}", est.bpm);
    }

    #[test]
    fn short_envelope_rejected() {
        let env = OnsetEnvelope { values: vec![0.0; 100], fps: 100.0 };
        assert!(matches!(
            estimate_tempo(&env, &TrackerConfig::default()),
            Err(TrackerError::EnvelopeTooShort { .. })
        ));
    }

    #[test]
    fn silent_envelope_yields_no_beats() {
        let env = OnsetEnvelope { values: vec![0.0; 1024], fps: 100.0 };
        let tempo = TempoEstimate { bpm: 120.0, confidence: 0.0, is_fallback: true };
        let beats = track_beats(&env, &tempo, &TrackerConfig::default()).unwrap();
        assert!(beats.is_empty());
        assert!((beats.clip_duration() - 10.24).abs() < 1e-9);
    }

    #[test]
    fn clean_click_train_is_tracked() {
        let truth = click_times(120.0, 10.24);
        let env = spike_envelope(&truth, 150.0, 10.24);
        let cfg = TrackerConfig::default();
        let tempo = estimate_tempo(&env, &cfg).unwrap();
        let beats = track_beats(&env, &tempo, &cfg).unwrap();

        assert!(
            (19..=21).contains(&beats.len()),
            "expected about 20 beats, got {}",
            beats.len()
        );
        let close = beats
            .times()
            .iter()
            .filter(|&&b| truth.iter().any(|&t| (b - t).abs() <= 0.030))
            .count();
        assert!(
            close as f64 >= 0.9 * beats.len() as f64,
            "{close}/{} beats within 30 ms",
            beats.len()
        );
    }

    #[test]
    fn beats_are_ordered_in_range_and_gapped() {
        let env = spike_envelope(&click_times(180.0, 12.0), 100.0, 12.0);
        let cfg = TrackerConfig::default();
        let tempo = estimate_tempo(&env, &cfg).unwrap();
        let beats = track_beats(&env, &tempo, &cfg).unwrap();
        assert!(!beats.is_empty());
        let times = beats.times();
        for pair in times.windows(2) {
            assert!(pair[0] < pair[1]);
            assert!(pair[1] - pair[0] >= 60.0 / cfg.bpm_max - 1e-9);
        }
        assert!(times[0] >= 0.0);
        assert!(*times.last().unwrap() <= beats.clip_duration());
    }

    #[test]
    fn tracking_is_deterministic() {
        let env = spike_envelope(&click_times(97.0, 10.24), 150.0, 10.24);
        let cfg = TrackerConfig::default();
        let tempo = estimate_tempo(&env, &cfg).unwrap();
        let a = track_beats(&env, &tempo, &cfg).unwrap();
        let b = track_beats(&env, &tempo, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tempo_out_of_range_rejected() {
        let env = spike_envelope(&click_times(120.0, 10.24), 100.0, 10.24);
        let tempo = TempoEstimate { bpm: 300.0, confidence: 1.0, is_fallback: false };
        assert!(matches!(
            track_beats(&env, &tempo, &TrackerConfig::default()),
            Err(TrackerError::TempoOutOfRange { .. })
        ));
    }

    #[test]
    fn higher_lambda_smooths_jittered_clicks() {
        // Monte-Carlo over jittered click envelopes: the population std of
        // inter-beat intervals under tl = 100 must not exceed the one under
        // tl = 50. Spikes get a realistic pedestal so the penalty term is
        // commensurable with onset gains.
        let fps = 100.0;
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(7);
        let jitter = Normal::new(0.0, 0.030).unwrap();

        let ibi_std = |tl: f64, rng: &mut Xoshiro256PlusPlus| -> f64 {
            let mut devs = Vec::new();
            for _ in 0..50 {
                let times: Vec<f64> = click_times(120.0, 10.24)
                    .into_iter()
                    .map(|t| (t + jitter.sample(rng)).max(0.0))
                    .collect();
                let mut env = spike_envelope(&times, fps, 10.24);
                for v in env.values.iter_mut() {
                    *v += 0.05;
                }
                let cfg =
                    TrackerConfig { transition_lambda: tl, fps, ..TrackerConfig::default() };
                let tempo = estimate_tempo(&env, &cfg).unwrap();
                let beats = track_beats(&env, &tempo, &cfg).unwrap();
                for pair in beats.times().windows(2) {
                    devs.push(pair[1] - pair[0]);
                }
            }
            let mean = devs.iter().sum::<f64>() / devs.len() as f64;
            (devs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / devs.len() as f64).sqrt()
        };

        let mut rng_a = rng.clone();
        let loose = ibi_std(50.0, &mut rng_a);
        let tight = ibi_std(100.0, &mut rng);
        assert!(tight <= loose + 1e-12, "tl=100 std {tight} vs tl=50 std {loose}");
    }

    #[test]
    fn beat_sequence_validation() {
        assert!(BeatSequence::new(vec![0.1, 0.1], 1.0).is_err());
        assert!(BeatSequence::new(vec![0.2, 0.1], 1.0).is_err());
        assert!(BeatSequence::new(vec![-0.1, 0.5], 1.0).is_err());
        assert!(BeatSequence::new(vec![0.5, 1.5], 1.0).is_err());
        assert!(BeatSequence::new(vec![0.0, 0.5, 1.0], 1.0).is_ok());
        assert!(BeatSequence::new(vec![], 0.0).is_ok());
    }
}
