//! End-to-end evaluation: descriptors in, MetricsReport out.
//!
//! Samples are processed in parallel but folded in lexicographic sample-id
//! order, so the report is byte-identical run to run regardless of
//! scheduling. A sample that fails (unreadable stem, bad annotation file)
//! becomes a failed row and never aborts the batch.

use std::path::Path;

use rayon::prelude::*;

use rhythmeter_core::metrics::{self, MetricsError};
use rhythmeter_core::tracker::BeatSequence;
use rhythmeter_core::{audio, pipeline, AudioClip, MetricsConfig, MultiTrackSample, PipelineConfig};

use crate::dataset::{self, SampleDescriptor};
use crate::report::{
    error_histogram, BeatsSource, CbdSummary, CbsSummary, ConfigEcho, FailedSample, MetricsReport,
    SampleRow, TrackIrs, TrackRow,
};
use crate::wav;

/// Errors that abort an evaluation outright (per-sample failures do not).
#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    /// Called with nothing to evaluate.
    #[error("no sample descriptors given")]
    NoDescriptors,
    /// Invalid tracker or metrics configuration.
    #[error("configuration rejected: {0}")]
    BadConfig(String),
}

/// How to evaluate a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    /// Track names to look for in each sample directory.
    pub track_names: Vec<String>,
    /// Segment length in seconds; `None` evaluates whole files. Ignored in
    /// ground-truth mode, which always treats one sample as one clip.
    pub segment_seconds: Option<f64>,
    /// Where beats come from.
    pub beats_source: BeatsSource,
    /// Everything is resampled to this rate before analysis.
    pub target_sample_rate: u32,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            track_names: dataset::DEFAULT_TRACKS.iter().map(|s| s.to_string()).collect(),
            segment_seconds: Some(10.24),
            beats_source: BeatsSource::Tracker,
            target_sample_rate: 16000,
        }
    }
}

/// Evaluates a dataset end to end and assembles the report.
pub fn evaluate(
    descriptors: &[SampleDescriptor],
    pipeline_cfg: &PipelineConfig,
    metrics_cfg: &MetricsConfig,
    opts: &EvalOptions,
) -> Result<MetricsReport, EvalError> {
    if descriptors.is_empty() {
        return Err(EvalError::NoDescriptors);
    }
    pipeline_cfg.tracker.validate().map_err(|e| EvalError::BadConfig(e.to_string()))?;
    metrics_cfg.validate().map_err(|e| EvalError::BadConfig(e.to_string()))?;

    let mut outcomes: Vec<(String, Result<Vec<MultiTrackSample>, String>)> = descriptors
        .par_iter()
        .map(|desc| {
            let result = match opts.beats_source {
                BeatsSource::Tracker => samples_from_audio(desc, pipeline_cfg, opts),
                BeatsSource::Files => samples_from_beat_files(desc, opts),
            };
            (desc.sample_id.clone(), result)
        })
        .collect();
    outcomes.sort_by(|a, b| a.0.cmp(&b.0));

    let mut samples = Vec::new();
    let mut failed = Vec::new();
    for (sample_id, outcome) in outcomes {
        match outcome {
            Ok(mut list) => samples.append(&mut list),
            Err(error) => failed.push(FailedSample { sample_id, error }),
        }
    }

    Ok(assemble_report(samples, failed, pipeline_cfg, metrics_cfg, opts))
}

/// Builds a report from already-extracted beat samples. Used directly by
/// the synthetic-oracle paths, which have no files to walk.
pub fn report_from_samples(
    samples: Vec<MultiTrackSample>,
    pipeline_cfg: &PipelineConfig,
    metrics_cfg: &MetricsConfig,
    opts: &EvalOptions,
) -> MetricsReport {
    assemble_report(samples, Vec::new(), pipeline_cfg, metrics_cfg, opts)
}

fn assemble_report(
    samples: Vec<MultiTrackSample>,
    failed: Vec<FailedSample>,
    pipeline_cfg: &PipelineConfig,
    metrics_cfg: &MetricsConfig,
    opts: &EvalOptions,
) -> MetricsReport {
    let rows: Vec<SampleRow> = samples
        .iter()
        .map(|sample| {
            let tracks = sample
                .tracks()
                .map(|(name, beats)| {
                    let ibi = metrics::inter_beat_intervals(beats);
                    let qualifies = ibi.intervals.len() >= metrics_cfg.irs_min_intervals;
                    TrackRow {
                        track: name.to_string(),
                        beats: beats.len(),
                        ibi_std: if qualifies { ibi.population_std() } else { None },
                    }
                })
                .collect();
            let cbs = metrics::sample_cbs(sample, metrics_cfg).ok();
            let cbd_errors = metrics::beat_errors(sample, metrics_cfg)
                .map(|seq| seq.errors)
                .unwrap_or_default();
            SampleRow { sample_id: sample.sample_id().to_string(), tracks, cbs, cbd_errors }
        })
        .collect();

    let irs = opts
        .track_names
        .iter()
        .map(|track| {
            let seqs: Vec<&BeatSequence> =
                samples.iter().filter_map(|s| s.track(track)).collect();
            match metrics::irs(seqs.iter().copied(), metrics_cfg) {
                Ok(r) => TrackIrs {
                    track: track.clone(),
                    value: Some(r.value),
                    samples_used: r.used,
                    samples_skipped: r.skipped,
                },
                Err(_) => TrackIrs {
                    track: track.clone(),
                    value: None,
                    samples_used: 0,
                    samples_skipped: seqs.len(),
                },
            }
        })
        .collect();

    let cbs = match metrics::cbs(&samples, metrics_cfg) {
        Ok(r) => CbsSummary {
            value: Some(r.value),
            samples_used: r.used,
            samples_skipped: r.skipped,
        },
        Err(_) => CbsSummary { value: None, samples_used: 0, samples_skipped: samples.len() },
    };

    let cbd = match metrics::cbd(&samples, metrics_cfg) {
        Ok(r) => CbdSummary {
            stats: Some(r.stats),
            pool_size: r.pool_size,
            samples_used: r.used,
            samples_skipped: r.skipped,
        },
        Err(_) => CbdSummary {
            stats: None,
            pool_size: 0,
            samples_used: 0,
            samples_skipped: samples.len(),
        },
    };

    let error_histogram =
        error_histogram(rows.iter().flat_map(|r| r.cbd_errors.iter().copied()));

    MetricsReport {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config: ConfigEcho {
            tracker: pipeline_cfg.tracker.clone(),
            metrics: metrics_cfg.clone(),
            spectrogram: pipeline_cfg.spectrogram.clone(),
            segment_seconds: opts.segment_seconds,
            beats_source: opts.beats_source,
            track_names: opts.track_names.clone(),
            target_sample_rate: opts.target_sample_rate,
        },
        samples_evaluated: samples.len(),
        failed,
        irs,
        cbs,
        cbd,
        error_histogram,
        rows,
    }
}

/// Audio mode: decode stems, resample, segment, track each segment.
fn samples_from_audio(
    desc: &SampleDescriptor,
    pipeline_cfg: &PipelineConfig,
    opts: &EvalOptions,
) -> Result<Vec<MultiTrackSample>, String> {
    let mut stems: Vec<(String, Option<AudioClip>)> = Vec::new();
    for track in &opts.track_names {
        let clip = match desc.stems.get(track).and_then(Option::as_ref) {
            Some(path) => Some(load_resampled(path, opts.target_sample_rate)?),
            None => None,
        };
        stems.push((track.clone(), clip));
    }
    let shortest = stems
        .iter()
        .filter_map(|(_, c)| c.as_ref().map(AudioClip::len))
        .min()
        .ok_or_else(|| "no stems present".to_string())?;

    // Stems of one sample may differ by a few samples after decode; align
    // them so every segment covers the same span on every track.
    let mut segmented: Vec<(String, Option<Vec<AudioClip>>)> = Vec::new();
    for (name, clip) in stems {
        let segments = match clip {
            Some(mut clip) => {
                clip.samples.truncate(shortest);
                let segs = match opts.segment_seconds {
                    Some(secs) => audio::segment(&clip, secs).map_err(|e| e.to_string())?,
                    None => vec![clip],
                };
                Some(segs)
            }
            None => None,
        };
        segmented.push((name, segments));
    }

    let n_segments = segmented
        .iter()
        .filter_map(|(_, s)| s.as_ref().map(Vec::len))
        .min()
        .unwrap_or(0);
    if n_segments == 0 {
        return Err("audio shorter than one segment".to_string());
    }

    let mut out = Vec::with_capacity(n_segments);
    for seg in 0..n_segments {
        let mut tracks: Vec<(String, BeatSequence)> = Vec::new();
        let mut clip_duration = None;
        for (name, segments) in &segmented {
            if let Some(segments) = segments {
                let beats = pipeline::track_clip(&segments[seg], pipeline_cfg)
                    .map_err(|e| format!("{name}: {e}"))?;
                clip_duration.get_or_insert(beats.clip_duration());
                tracks.push((name.clone(), beats));
            }
        }
        let duration = clip_duration.expect("at least one stem present");
        // Absent stems count as empty tracks of the same duration.
        for (name, segments) in &segmented {
            if segments.is_none() {
                tracks.push((name.clone(), BeatSequence::empty(duration)));
            }
        }
        tracks.sort_by_key(|(name, _)| order_key(&opts.track_names, name));

        let id = if opts.segment_seconds.is_some() {
            format!("{}/{seg:04}", desc.sample_id)
        } else {
            desc.sample_id.clone()
        };
        out.push(MultiTrackSample::new(id, tracks).map_err(|e| e.to_string())?);
    }
    Ok(out)
}

/// Ground-truth mode: read `<track>.beats.txt` files; one sample per
/// directory, clip duration = the latest annotated beat.
fn samples_from_beat_files(
    desc: &SampleDescriptor,
    opts: &EvalOptions,
) -> Result<Vec<MultiTrackSample>, String> {
    let mut times_per_track: Vec<(String, Vec<f64>)> = Vec::new();
    for track in &opts.track_names {
        let times = match desc.beat_files.get(track).and_then(Option::as_ref) {
            Some(path) => dataset::read_beats_file(path).map_err(|e| e.to_string())?,
            None => Vec::new(),
        };
        times_per_track.push((track.clone(), times));
    }
    if times_per_track.iter().all(|(_, t)| t.is_empty()) {
        return Err("no beat annotations present".to_string());
    }

    let duration = times_per_track
        .iter()
        .filter_map(|(_, t)| t.last().copied())
        .fold(0.0f64, f64::max);

    let tracks = times_per_track
        .into_iter()
        .map(|(name, times)| {
            BeatSequence::new(times, duration)
                .map(|seq| (name.clone(), seq))
                .map_err(|e| format!("{name}: {e}"))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let sample = MultiTrackSample::new(desc.sample_id.clone(), tracks)
        .map_err(|e: MetricsError| e.to_string())?;
    Ok(vec![sample])
}

fn load_resampled(path: &Path, target_rate: u32) -> Result<AudioClip, String> {
    let clip = wav::load_wav(path).map_err(|e| e.to_string())?;
    audio::resample(&clip, target_rate).map_err(|e| e.to_string())
}

fn order_key(names: &[String], name: &str) -> usize {
    names.iter().position(|n| n == name).unwrap_or(usize::MAX)
}
