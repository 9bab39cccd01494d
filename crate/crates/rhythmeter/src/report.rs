//! Evaluation reports: the JSON schema, CSV flattening, and comparison.
//!
//! The JSON layout is versioned via `tool_version` and is a faithful dump
//! of the report struct: parsing an emitted report reconstructs an equal
//! value. Aggregates are recomputable from the per-sample rows (each row
//! carries its beat counts, interval deviations, coverage ratio, and raw
//! error pool), which keeps reports auditable after the fact.

use std::io;

use serde::{Deserialize, Serialize};

use rhythmeter_core::metrics::CbdStats;
use rhythmeter_core::{MetricsConfig, SpectrogramConfig, TrackerConfig};

/// Number of fixed-width histogram bins over the error range [0, 1].
pub const HISTOGRAM_BINS: usize = 20;

/// Where beat sequences come from during evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeatsSource {
    /// Full audio pipeline: decode, resample, segment, onset, track.
    #[default]
    Tracker,
    /// Ground-truth `<track>.beats.txt` files; audio is never touched.
    Files,
}

impl std::fmt::Display for BeatsSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BeatsSource::Tracker => write!(f, "tracker"),
            BeatsSource::Files => write!(f, "files"),
        }
    }
}

/// Everything the numbers in a report depend on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    /// Beat-tracking parameters.
    pub tracker: TrackerConfig,
    /// Metric parameters.
    pub metrics: MetricsConfig,
    /// Front-end parameters.
    pub spectrogram: SpectrogramConfig,
    /// Segment length in seconds; `None` evaluates whole files.
    pub segment_seconds: Option<f64>,
    /// Beat source.
    pub beats_source: BeatsSource,
    /// Track names evaluated, in report order.
    pub track_names: Vec<String>,
    /// Sample rate everything is resampled to before analysis.
    pub target_sample_rate: u32,
}

/// Per-track IRS with its skip tally.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackIrs {
    /// Track name.
    pub track: String,
    /// Mean interval deviation; `None` when no sample qualified.
    pub value: Option<f64>,
    /// Samples that qualified.
    pub samples_used: usize,
    /// Samples skipped for having too few intervals.
    pub samples_skipped: usize,
}

/// CBS aggregate with its skip tally.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CbsSummary {
    /// Mean per-sample coverage ratio; `None` when no sample qualified.
    pub value: Option<f64>,
    /// Samples that qualified.
    pub samples_used: usize,
    /// Samples skipped (fewer than two content tracks or no occupied window).
    pub samples_skipped: usize,
}

/// CBD aggregate with its tallies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CbdSummary {
    /// Pooled statistics; `None` when the pool is empty.
    pub stats: Option<CbdStats>,
    /// Pooled error count.
    pub pool_size: usize,
    /// Samples that qualified.
    pub samples_used: usize,
    /// Samples skipped for having fewer than two content tracks.
    pub samples_skipped: usize,
}

/// One track's numbers within one sample row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackRow {
    /// Track name.
    pub track: String,
    /// Detected or annotated beat count.
    pub beats: usize,
    /// Population std of the inter-beat intervals; present only when the
    /// sample qualifies for IRS under the configured minimum.
    pub ibi_std: Option<f64>,
}

/// One evaluated sample (one segment, in segmented runs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    /// Sample id; segmented runs append `/NNNN`.
    pub sample_id: String,
    /// Per-track numbers, aligned with `config.track_names`.
    pub tracks: Vec<TrackRow>,
    /// This sample's coverage ratio; `None` when it was skipped.
    pub cbs: Option<f64>,
    /// This sample's normalized beat errors in enumeration order.
    pub cbd_errors: Vec<f64>,
}

/// A sample that could not be evaluated at all.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedSample {
    /// Sample id.
    pub sample_id: String,
    /// Why it failed.
    pub error: String,
}

/// Aggregate rhythm metrics over one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Version of the tool that wrote the report.
    pub tool_version: String,
    /// Echo of every parameter the numbers depend on.
    pub config: ConfigEcho,
    /// Samples that produced a row.
    pub samples_evaluated: usize,
    /// Samples that failed outright, with reasons.
    pub failed: Vec<FailedSample>,
    /// Per-track IRS in `config.track_names` order.
    pub irs: Vec<TrackIrs>,
    /// Cross-track beat synchronization.
    pub cbs: CbsSummary,
    /// Cross-track beat dispersion.
    pub cbd: CbdSummary,
    /// Pooled error histogram: 20 bins of width 0.05 over [0, 1], the last
    /// bin closed at 1.0.
    pub error_histogram: Vec<u64>,
    /// Per-sample detail rows in evaluation order.
    pub rows: Vec<SampleRow>,
}

/// Histogram of pooled errors with [`HISTOGRAM_BINS`] fixed bins.
pub fn error_histogram(errors: impl Iterator<Item = f64>) -> Vec<u64> {
    let mut bins = vec![0u64; HISTOGRAM_BINS];
    for e in errors {
        let idx = ((e / 0.05).floor() as usize).min(HISTOGRAM_BINS - 1);
        bins[idx] += 1;
    }
    bins
}

/// Output format for reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    /// Versioned JSON; round-trips to an equal report.
    #[default]
    Json,
    /// Flattened per-sample rows with a header line.
    Csv,
}

/// Serializes a report as pretty JSON with a trailing newline.
pub fn to_json(report: &MetricsReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

/// Parses a report back from JSON.
pub fn from_json(text: &str) -> Result<MetricsReport, serde_json::Error> {
    serde_json::from_str(text)
}

/// Flattens the per-sample rows as CSV: one row per sample, two columns per
/// track (beat count and interval std), then the coverage ratio and the
/// error count/mean.
pub fn to_csv(report: &MetricsReport) -> Result<String, csv::Error> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["sample_id".to_string()];
    for track in &report.config.track_names {
        header.push(format!("beats_{track}"));
        header.push(format!("ibi_std_{track}"));
    }
    header.push("cbs".into());
    header.push("cbd_error_count".into());
    header.push("cbd_error_mean".into());
    writer.write_record(&header)?;

    for row in &report.rows {
        let mut record = vec![row.sample_id.clone()];
        for track in &report.config.track_names {
            match row.tracks.iter().find(|t| &t.track == track) {
                Some(t) => {
                    record.push(t.beats.to_string());
                    record.push(t.ibi_std.map(|v| v.to_string()).unwrap_or_default());
                }
                None => {
                    record.push(String::new());
                    record.push(String::new());
                }
            }
        }
        record.push(row.cbs.map(|v| v.to_string()).unwrap_or_default());
        record.push(row.cbd_errors.len().to_string());
        let mean = if row.cbd_errors.is_empty() {
            String::new()
        } else {
            (row.cbd_errors.iter().sum::<f64>() / row.cbd_errors.len() as f64).to_string()
        };
        record.push(mean);
        writer.write_record(&record)?;
    }

    let bytes = writer.into_inner().expect("in-memory writer");
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

/// Writes a report in the chosen format.
pub fn write_report(
    report: &MetricsReport,
    format: ReportFormat,
    out: &mut dyn io::Write,
) -> anyhow::Result<()> {
    match format {
        ReportFormat::Json => out.write_all(to_json(report).as_bytes())?,
        ReportFormat::Csv => out.write_all(to_csv(report)?.as_bytes())?,
    }
    Ok(())
}

/// Human-readable side-by-side comparison of two reports.
pub fn comparison_table(left: &MetricsReport, right: &MetricsReport) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    let fmt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_else(|| "n/a".into());
    let delta = |a: Option<f64>, b: Option<f64>| match (a, b) {
        (Some(a), Some(b)) => format!("{:+.6}", b - a),
        _ => "n/a".into(),
    };

    let _ = writeln!(out, "{:<18} {:>14} {:>14} {:>14}", "metric", "left", "right", "delta");
    for (name, a, b) in [
        ("cbs", left.cbs.value, right.cbs.value),
        ("cbd_mean", left.cbd.stats.map(|s| s.mean), right.cbd.stats.map(|s| s.mean)),
        ("cbd_std", left.cbd.stats.map(|s| s.std), right.cbd.stats.map(|s| s.std)),
        ("cbd_median", left.cbd.stats.map(|s| s.median), right.cbd.stats.map(|s| s.median)),
    ] {
        let _ = writeln!(out, "{:<18} {:>14} {:>14} {:>14}", name, fmt(a), fmt(b), delta(a, b));
    }
    for track in &left.config.track_names {
        let a = left.irs.iter().find(|t| &t.track == track).and_then(|t| t.value);
        let b = right.irs.iter().find(|t| &t.track == track).and_then(|t| t.value);
        let name = format!("irs_{track}");
        let _ = writeln!(out, "{:<18} {:>14} {:>14} {:>14}", name, fmt(a), fmt(b), delta(a, b));
    }
    let _ = writeln!(
        out,
        "{:<18} {:>14} {:>14}",
        "samples", left.samples_evaluated, right.samples_evaluated
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_report() -> MetricsReport {
        MetricsReport {
            tool_version: "0.1.0".into(),
            config: ConfigEcho {
                tracker: TrackerConfig::default(),
                metrics: MetricsConfig::default(),
                spectrogram: SpectrogramConfig::default(),
                segment_seconds: Some(10.24),
                beats_source: BeatsSource::Files,
                track_names: vec!["bass".into(), "drums".into()],
                target_sample_rate: 16000,
            },
            samples_evaluated: 1,
            failed: vec![FailedSample { sample_id: "broken".into(), error: "no stems".into() }],
            irs: vec![
                TrackIrs {
                    track: "bass".into(),
                    value: Some(0.0125),
                    samples_used: 1,
                    samples_skipped: 0,
                },
                TrackIrs { track: "drums".into(), value: None, samples_used: 0, samples_skipped: 1 },
            ],
            cbs: CbsSummary { value: Some(0.75), samples_used: 1, samples_skipped: 0 },
            cbd: CbdSummary {
                stats: Some(CbdStats { mean: 0.2, std: 0.0, median: 0.2 }),
                pool_size: 3,
                samples_used: 1,
                samples_skipped: 0,
            },
            error_histogram: error_histogram([0.2, 0.2, 0.2].into_iter()),
            rows: vec![SampleRow {
                sample_id: "s1/0000".into(),
                tracks: vec![
                    TrackRow { track: "bass".into(), beats: 21, ibi_std: Some(0.0125) },
                    TrackRow { track: "drums".into(), beats: 1, ibi_std: None },
                ],
                cbs: Some(0.75),
                cbd_errors: vec![0.2, 0.2, 0.2],
            }],
        }
    }

    #[test]
    fn json_round_trip_is_equal() {
        let report = tiny_report();
        let text = to_json(&report);
        let back = from_json(&text).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn csv_has_header_plus_sample_rows() {
        let report = tiny_report();
        let csv = to_csv(&report).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), report.rows.len() + 1);
        assert!(lines[0].starts_with("sample_id,beats_bass,ibi_std_bass,beats_drums"));
        assert!(lines[1].starts_with("s1/0000,21,"));
    }

    #[test]
    fn histogram_conserves_pool_size() {
        let errors = [0.0, 0.049, 0.05, 0.21, 0.99, 1.0];
        let bins = error_histogram(errors.iter().copied());
        assert_eq!(bins.iter().sum::<u64>() as usize, errors.len());
        assert_eq!(bins[0], 2);
        assert_eq!(bins[1], 1);
        assert_eq!(bins[4], 1);
        assert_eq!(bins[19], 2); // 0.99 and the closed right edge 1.0
    }

    #[test]
    fn comparison_table_mentions_all_metrics() {
        let report = tiny_report();
        let table = comparison_table(&report, &report);
        for needle in ["cbs", "cbd_mean", "cbd_median", "irs_bass", "samples"] {
            assert!(table.contains(needle), "missing {needle}");
        }
    }
}
