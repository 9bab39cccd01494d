//! The three rhythm metrics: IRS, CBS, and CBD.
//!
//! All three consume [`BeatSequence`] values and are indifferent to where
//! the beats came from (tracker output, annotation files, or the synthetic
//! generator):
//!
//! - **IRS** (inner-track rhythmic stability): the mean over samples of the
//!   population standard deviation of one track's inter-beat intervals.
//!   Lower is steadier.
//! - **CBS** (cross-track beat synchronization): the timeline is cut into
//!   fixed windows; per window, the fraction of content tracks that beat in
//!   it; per sample, the mean of that fraction over windows where anything
//!   beats at all; then the mean over samples. Higher is tighter, 1.0 means
//!   every track hits every occupied window.
//! - **CBD** (cross-track beat dispersion): every track in turn acts as the
//!   reference; each interior reference beat is matched to the nearest beat
//!   of every other track within half an inter-beat interval on either
//!   side, and the timing error is normalized by that half-interval. The
//!   pooled errors are summarized by mean, population std, and median, all
//!   in [0, 1]. Lower is tighter.
//!
//! Degenerate samples (too few beats, fewer than two content tracks) are
//! skipped and tallied, never silently folded in as zeros; if nothing
//! qualifies the aggregate is an error, not a 0.
//!
//! Aggregation sorts contributions before summing, so every statistic is
//! exactly invariant under re-ordering of samples and relabeling of tracks.

use alloc::vec;
use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::tracker::BeatSequence;

/// Errors from metric computation.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    /// A sample must hold at least one track.
    #[error("sample has no tracks")]
    NoTracks,
    /// Track names within a sample must be unique.
    #[error("duplicate track name {0:?}")]
    DuplicateTrack(String),
    /// All tracks of a sample must share one clip duration.
    #[error("track {track:?} has clip duration {got}, expected {expected}")]
    DurationMismatch {
        /// Offending track name.
        track: String,
        /// Duration carried by the first track.
        expected: f64,
        /// Duration carried by the offending track.
        got: f64,
    },
    /// Fewer content tracks than the operation needs.
    #[error("sample has {got} content tracks, need {need}")]
    NoContentTracks {
        /// Content tracks found.
        got: usize,
        /// Content tracks required.
        need: usize,
    },
    /// No window contained any beat, so the coverage ratio is undefined.
    #[error("no window contains a beat")]
    NoOccupiedWindows,
    /// Every sample was skipped; the aggregate is undefined.
    #[error("no qualifying samples")]
    NoQualifyingSamples,
    /// No beat of any reference track found a match anywhere.
    #[error("beat error pool is empty")]
    EmptyErrorPool,
    /// Configuration violates its invariants.
    #[error("invalid metrics config: {0}")]
    InvalidConfig(&'static str),
}

/// How CBD treats a reference beat with no match in its search window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum UnmatchedPolicy {
    /// The beat contributes nothing; coverage gaps are CBS's job.
    #[default]
    Skip,
    /// The beat contributes the maximum error of 1.0.
    Penalize,
}

/// Metric parameters.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct MetricsConfig {
    /// CBS window length in seconds.
    pub cbs_window: f64,
    /// Minimum beats for a track to count as having content.
    pub min_beats_content: usize,
    /// Minimum inter-beat intervals for a sample to enter IRS.
    pub irs_min_intervals: usize,
    /// Treatment of unmatched reference beats in CBD.
    pub cbd_unmatched: UnmatchedPolicy,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            cbs_window: 0.1,
            min_beats_content: 2,
            irs_min_intervals: 2,
            cbd_unmatched: UnmatchedPolicy::Skip,
        }
    }
}

impl MetricsConfig {
    /// Checks the config invariants.
    pub fn validate(&self) -> Result<(), MetricsError> {
        if !(self.cbs_window > 0.0) {
            return Err(MetricsError::InvalidConfig("cbs_window must be positive"));
        }
        if self.min_beats_content < 1 {
            return Err(MetricsError::InvalidConfig("min_beats_content must be >= 1"));
        }
        if self.irs_min_intervals < 1 {
            return Err(MetricsError::InvalidConfig("irs_min_intervals must be >= 1"));
        }
        Ok(())
    }
}

/// Named per-track beat sequences for one clip; the unit of evaluation.
#[derive(Debug, Clone)]
pub struct MultiTrackSample {
    sample_id: String,
    tracks: Vec<(String, BeatSequence)>,
    clip_duration: f64,
}

impl MultiTrackSample {
    /// Builds a sample, checking that track names are unique and that all
    /// sequences carry the same clip duration.
    pub fn new(
        sample_id: impl Into<String>,
        tracks: Vec<(String, BeatSequence)>,
    ) -> Result<Self, MetricsError> {
        let first = tracks.first().ok_or(MetricsError::NoTracks)?;
        let clip_duration = first.1.clip_duration();
        for (i, (name, seq)) in tracks.iter().enumerate() {
            if tracks[..i].iter().any(|(other, _)| other == name) {
                return Err(MetricsError::DuplicateTrack(name.clone()));
            }
            if seq.clip_duration() != clip_duration {
                return Err(MetricsError::DurationMismatch {
                    track: name.clone(),
                    expected: clip_duration,
                    got: seq.clip_duration(),
                });
            }
        }
        Ok(Self { sample_id: sample_id.into(), tracks, clip_duration })
    }

    /// Sample identifier.
    pub fn sample_id(&self) -> &str {
        &self.sample_id
    }

    /// Clip duration shared by every track, in seconds.
    pub fn clip_duration(&self) -> f64 {
        self.clip_duration
    }

    /// Tracks in insertion order.
    pub fn tracks(&self) -> impl Iterator<Item = (&str, &BeatSequence)> {
        self.tracks.iter().map(|(name, seq)| (name.as_str(), seq))
    }

    /// The beat sequence of one track, if present.
    pub fn track(&self, name: &str) -> Option<&BeatSequence> {
        self.tracks.iter().find(|(n, _)| n == name).map(|(_, s)| s)
    }

    /// Tracks with at least `cfg.min_beats_content` beats.
    pub fn content_tracks(&self, cfg: &MetricsConfig) -> Vec<(&str, &BeatSequence)> {
        self.tracks()
            .filter(|(_, seq)| seq.len() >= cfg.min_beats_content)
            .collect()
    }
}

/// Consecutive inter-beat intervals of one track, all positive.
#[derive(Debug, Clone, PartialEq)]
pub struct IbiSeries {
    /// Intervals in seconds; one fewer than the beat count.
    pub intervals: Vec<f64>,
}

impl IbiSeries {
    /// Population (divide-by-N) standard deviation of the intervals, or
    /// `None` when there are no intervals.
    pub fn population_std(&self) -> Option<f64> {
        if self.intervals.is_empty() {
            return None;
        }
        let n = self.intervals.len() as f64;
        let mean = self.intervals.iter().sum::<f64>() / n;
        let var = self.intervals.iter().map(|i| (i - mean) * (i - mean)).sum::<f64>() / n;
        Some(var.sqrt())
    }
}

/// Differences of consecutive beat times. Empty for fewer than two beats.
pub fn inter_beat_intervals(beats: &BeatSequence) -> IbiSeries {
    IbiSeries { intervals: beats.times().windows(2).map(|w| w[1] - w[0]).collect() }
}

/// IRS over one track's per-sample beat sequences plus its skip tally.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrsResult {
    /// Mean of per-sample interval standard deviations.
    pub value: f64,
    /// Samples that qualified.
    pub used: usize,
    /// Samples skipped for having too few intervals.
    pub skipped: usize,
}

/// Inner-track rhythmic stability of one track across samples.
///
/// Each sample with at least `cfg.irs_min_intervals` intervals contributes
/// the population standard deviation of its intervals; the result is the
/// arithmetic mean of the contributions. Samples with fewer beats are
/// skipped and tallied. When every sample is skipped the metric is
/// undefined and an error is returned rather than 0.
pub fn irs<'a, I>(per_sample_beats: I, cfg: &MetricsConfig) -> Result<IrsResult, MetricsError>
where
    I: IntoIterator<Item = &'a BeatSequence>,
{
    cfg.validate()?;
    let mut stds = Vec::new();
    let mut skipped = 0usize;
    for beats in per_sample_beats {
        let ibi = inter_beat_intervals(beats);
        if ibi.intervals.len() >= cfg.irs_min_intervals {
            stds.push(ibi.population_std().expect("non-empty intervals"));
        } else {
            skipped += 1;
        }
    }
    if stds.is_empty() {
        return Err(MetricsError::NoQualifyingSamples);
    }
    Ok(IrsResult { value: sorted_mean(&mut stds), used: stds.len(), skipped })
}

/// Per-window fractions of content tracks that beat in each window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowCoverage {
    /// Window length in seconds.
    pub window_seconds: f64,
    /// One ratio in [0, 1] per window over `[0, clip_duration)`.
    pub ratios: Vec<f64>,
}

/// Windowed track-coverage ratios for one sample.
///
/// The timeline `[0, clip_duration)` is cut into `floor(duration / window)`
/// contiguous windows; `ratios[i]` is the fraction of content tracks with
/// at least one beat in window `i`. Tracks below the content threshold are
/// excluded from numerator and denominator alike. Beats past the last full
/// window are ignored.
pub fn window_coverage(
    sample: &MultiTrackSample,
    cfg: &MetricsConfig,
) -> Result<WindowCoverage, MetricsError> {
    cfg.validate()?;
    let content = sample.content_tracks(cfg);
    if content.is_empty() {
        return Err(MetricsError::NoContentTracks { got: 0, need: 1 });
    }
    let w = cfg.cbs_window;
    let n_windows = (sample.clip_duration() / w).floor() as usize;
    let mut counts = vec![0usize; n_windows];
    for (_, seq) in &content {
        let mut seen = usize::MAX;
        for &t in seq.times() {
            let idx = (t / w).floor() as usize;
            if idx < n_windows && idx != seen {
                // One vote per track per window; consecutive beats often
                // share a window.
                counts[idx] += 1;
                seen = idx;
            }
        }
    }
    let denom = content.len() as f64;
    Ok(WindowCoverage {
        window_seconds: w,
        ratios: counts.into_iter().map(|c| c as f64 / denom).collect(),
    })
}

/// The coverage ratio of one sample: occupied-window mean of `ratios`.
///
/// Requires at least two content tracks; synchronization of fewer is
/// undefined. Windows where no track beats are excluded from the mean.
pub fn sample_cbs(sample: &MultiTrackSample, cfg: &MetricsConfig) -> Result<f64, MetricsError> {
    cfg.validate()?;
    let content = sample.content_tracks(cfg).len();
    if content < 2 {
        return Err(MetricsError::NoContentTracks { got: content, need: 2 });
    }
    let coverage = window_coverage(sample, cfg)?;
    let occupied: Vec<f64> = coverage.ratios.iter().copied().filter(|&r| r > 0.0).collect();
    if occupied.is_empty() {
        return Err(MetricsError::NoOccupiedWindows);
    }
    let mut values = occupied;
    Ok(sorted_mean(&mut values))
}

/// CBS over a sample list plus its skip tally.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CbsResult {
    /// Mean of per-sample coverage ratios, in (0, 1].
    pub value: f64,
    /// Samples that qualified.
    pub used: usize,
    /// Samples skipped (fewer than two content tracks, or beatless).
    pub skipped: usize,
}

/// Cross-track beat synchronization over a sample list.
///
/// Each qualifying sample contributes its [`sample_cbs`] ratio with equal
/// weight; samples with fewer than two content tracks (or without a single
/// occupied window) are skipped and tallied.
pub fn cbs(samples: &[MultiTrackSample], cfg: &MetricsConfig) -> Result<CbsResult, MetricsError> {
    cfg.validate()?;
    let mut values = Vec::new();
    let mut skipped = 0usize;
    for sample in samples {
        match sample_cbs(sample, cfg) {
            Ok(v) => values.push(v),
            Err(MetricsError::NoContentTracks { .. }) | Err(MetricsError::NoOccupiedWindows) => {
                skipped += 1;
            }
            Err(e) => return Err(e),
        }
    }
    if values.is_empty() {
        return Err(MetricsError::NoQualifyingSamples);
    }
    Ok(CbsResult { value: sorted_mean(&mut values), used: values.len(), skipped })
}

/// Interval-normalized timing errors, each in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct BeatErrorSequence {
    /// Pooled normalized errors in enumeration order: reference tracks in
    /// sample order, other tracks in sample order, beats ascending.
    pub errors: Vec<f64>,
}

/// Pools normalized beat-timing errors across all ordered track pairs of
/// one sample.
///
/// For reference track `s` and other track `s'`, every interior reference
/// beat `b_t` (both neighboring intervals defined; first and last beats
/// carry only one and are skipped) searches `s'` for beats in
/// `[b_t - I_prev / 2, b_t + I_next / 2]`, both ends inclusive. The nearest
/// candidate wins; on an exact distance tie the earlier one is taken. The
/// error is `|delta|` divided by the half-interval on the matched side, so
/// a match exactly at the window edge scores 1.0. Reference beats with no
/// candidate contribute nothing under [`UnmatchedPolicy::Skip`] and 1.0
/// under [`UnmatchedPolicy::Penalize`].
pub fn beat_errors(
    sample: &MultiTrackSample,
    cfg: &MetricsConfig,
) -> Result<BeatErrorSequence, MetricsError> {
    cfg.validate()?;
    let content = sample.content_tracks(cfg);
    if content.len() < 2 {
        return Err(MetricsError::NoContentTracks { got: content.len(), need: 2 });
    }

    let mut errors = Vec::new();
    for (ri, (_, reference)) in content.iter().enumerate() {
        for (oi, (_, other)) in content.iter().enumerate() {
            if ri == oi {
                continue;
            }
            let times = reference.times();
            for t in 1..times.len().saturating_sub(1) {
                let beat = times[t];
                let half_prev = (beat - times[t - 1]) / 2.0;
                let half_next = (times[t + 1] - beat) / 2.0;
                match nearest_in_window(other.times(), beat, beat - half_prev, beat + half_next) {
                    Some(delta) => {
                        let error = if delta < 0.0 {
                            -delta / half_prev
                        } else if delta > 0.0 {
                            delta / half_next
                        } else {
                            0.0
                        };
                        errors.push(error);
                    }
                    None => {
                        if cfg.cbd_unmatched == UnmatchedPolicy::Penalize {
                            errors.push(1.0);
                        }
                    }
                }
            }
        }
    }
    Ok(BeatErrorSequence { errors })
}

/// Signed offset of the candidate nearest to `beat` within `[lo, hi]`,
/// preferring the earlier candidate on exact ties.
fn nearest_in_window(times: &[f64], beat: f64, lo: f64, hi: f64) -> Option<f64> {
    let start = times.partition_point(|&x| x < lo);
    let mut best: Option<f64> = None;
    for &x in &times[start..] {
        if x > hi {
            break;
        }
        let delta = x - beat;
        if best.is_none_or(|b| delta.abs() < b.abs()) {
            best = Some(delta);
        }
    }
    best
}

/// Summary statistics of a pooled error sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CbdStats {
    /// Pooled mean error.
    pub mean: f64,
    /// Pooled population standard deviation.
    pub std: f64,
    /// Pooled median; the mean of the two central values for even pools.
    pub median: f64,
}

/// CBD over a sample list plus its tallies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CbdResult {
    /// Pooled statistics, each in [0, 1].
    pub stats: CbdStats,
    /// Total pooled errors.
    pub pool_size: usize,
    /// Samples that qualified.
    pub used: usize,
    /// Samples skipped for having fewer than two content tracks.
    pub skipped: usize,
}

/// Cross-track beat dispersion over a sample list.
///
/// Pools [`beat_errors`] across every sample, reference choice, and beat,
/// then reports the pooled mean, population standard deviation, and median.
/// An empty pool (no matches anywhere) is an error, not a zero.
pub fn cbd(samples: &[MultiTrackSample], cfg: &MetricsConfig) -> Result<CbdResult, MetricsError> {
    cfg.validate()?;
    let mut pool = Vec::new();
    let mut used = 0usize;
    let mut skipped = 0usize;
    for sample in samples {
        match beat_errors(sample, cfg) {
            Ok(seq) => {
                used += 1;
                pool.extend(seq.errors);
            }
            Err(MetricsError::NoContentTracks { .. }) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    let stats = pooled_stats(&mut pool).ok_or(MetricsError::EmptyErrorPool)?;
    Ok(CbdResult { stats, pool_size: pool.len(), used, skipped })
}

/// Mean / population std / median of a pool. Sorts the pool first, which
/// makes all three independent of enumeration order.
pub fn pooled_stats(pool: &mut [f64]) -> Option<CbdStats> {
    if pool.is_empty() {
        return None;
    }
    pool.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = pool.len() as f64;
    let mean = pool.iter().sum::<f64>() / n;
    let std = (pool.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / n).sqrt();
    let median = if pool.len() % 2 == 1 {
        pool[pool.len() / 2]
    } else {
        0.5 * (pool[pool.len() / 2 - 1] + pool[pool.len() / 2])
    };
    Some(CbdStats { mean, std, median })
}

/// Order-independent mean: sorts, then sums.
fn sorted_mean(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values.iter().sum::<f64>() / values.len() as f64
}
