//! End-to-end tests of the `rhythmeter` binary and report invariants.

use std::fs;
use std::path::Path;
use std::process::Command;

use rhythmeter::dataset;
use rhythmeter::evaluate::{evaluate, EvalOptions};
use rhythmeter::report::{self, BeatsSource};
use rhythmeter::sweep::{self, GridSetting};
use rhythmeter::wav;
use rhythmeter_core::synth::{self, SynthSpec};
use rhythmeter_core::{MetricsConfig, PipelineConfig};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rhythmeter"))
}

fn write_corpus(root: &Path, spec: &SynthSpec, n: usize, audio: bool) {
    for gt in synth::corpus(spec, n).unwrap() {
        let dir = root.join(gt.sample.sample_id());
        fs::create_dir_all(&dir).unwrap();
        if audio {
            for (name, clip) in &gt.audio {
                wav::write_wav(&dir.join(format!("{name}.wav")), clip).unwrap();
            }
        }
        for (name, beats) in gt.sample.tracks() {
            dataset::write_beats_file(&dir.join(format!("{name}.beats.txt")), beats.times())
                .unwrap();
        }
    }
}

#[test]
fn beats_prints_six_decimal_times() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SynthSpec { n_tracks: 1, ..SynthSpec::default() };
    let gt = synth::generate(&spec).unwrap();
    let path = dir.path().join("clicks.wav");
    wav::write_wav(&path, &gt.audio[0].1).unwrap();

    let out = bin().arg("beats").arg(&path).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert!(lines.len() >= 19, "expected about 20 beats, got {}", lines.len());
    for line in &lines {
        let (whole, frac) = line.split_once('.').expect("decimal point");
        assert_eq!(frac.len(), 6, "six decimals in {line:?}");
        whole.parse::<u64>().unwrap();
    }
    let times: Vec<f64> = lines.iter().map(|l| l.parse().unwrap()).collect();
    assert!(times.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn analyze_json_round_trips_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let spec = SynthSpec { n_tracks: 2, jitter_sigma: 0.01, seed: 5, ..SynthSpec::default() };
    write_corpus(&data, &spec, 2, true);

    let report_path = dir.path().join("report.json");
    let out = bin()
        .args(["analyze"])
        .arg(&data)
        .args(["--beats-from", "files", "--tracks", "bass,drums"])
        .arg("--out")
        .arg(&report_path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let text = fs::read_to_string(&report_path).unwrap();
    let parsed = report::from_json(&text).unwrap();
    assert_eq!(report::to_json(&parsed), text, "emit -> parse -> emit is stable");
    assert_eq!(parsed.samples_evaluated, 2);
    assert_eq!(parsed.config.beats_source, BeatsSource::Files);
}

#[test]
fn analyze_csv_has_expected_shape() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let spec = SynthSpec { n_tracks: 2, seed: 6, ..SynthSpec::default() };
    write_corpus(&data, &spec, 3, true);

    let out = bin()
        .args(["analyze"])
        .arg(&data)
        .args(["--beats-from", "files", "--tracks", "bass,drums", "--format", "csv"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 1 + 3, "header plus one row per sample");
    assert!(lines[0].starts_with("sample_id,beats_bass,ibi_std_bass,beats_drums"));
}

#[test]
fn analyze_exit_code_two_when_nothing_qualifies() {
    let dir = tempfile::tempdir().unwrap();
    let sample = dir.path().join("data/s1");
    fs::create_dir_all(&sample).unwrap();
    // One lone beat per track: no intervals, no content tracks.
    fs::write(sample.join("bass.beats.txt"), "1.0\n").unwrap();
    fs::write(sample.join("drums.beats.txt"), "1.5\n").unwrap();

    let out = bin()
        .args(["analyze"])
        .arg(dir.path().join("data"))
        .args(["--beats-from", "files", "--tracks", "bass,drums"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn analyze_exit_code_one_on_missing_root() {
    let out = bin().args(["analyze", "/nonexistent/missing-dataset"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn synth_writes_dataset_and_spec_defaults_apply() {
    let dir = tempfile::tempdir().unwrap();
    let spec_path = dir.path().join("spec.json");
    fs::write(&spec_path, r#"{ "bpm": 100.0, "n_tracks": 2, "seed": 9 }"#).unwrap();

    let out_dir = dir.path().join("out");
    let out = bin()
        .args(["synth", "--spec"])
        .arg(&spec_path)
        .arg("--out")
        .arg(&out_dir)
        .args(["--samples", "2"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for sample in ["synth00000", "synth00001"] {
        for file in ["bass.wav", "drums.wav", "bass.beats.txt", "drums.beats.txt"] {
            assert!(out_dir.join(sample).join(file).is_file(), "{sample}/{file}");
        }
    }
    // 100 BPM over the default 10.24 s: beats 0, 0.6, ..., 10.2.
    let beats =
        dataset::read_beats_file(&out_dir.join("synth00000/bass.beats.txt")).unwrap();
    assert_eq!(beats.len(), 18);
    assert_eq!(beats[1], 0.6);
}

#[test]
fn compare_prints_metric_table() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let spec = SynthSpec { n_tracks: 2, seed: 3, ..SynthSpec::default() };
    write_corpus(&data, &spec, 1, true);

    let report_path = dir.path().join("r.json");
    assert!(bin()
        .args(["analyze"])
        .arg(&data)
        .args(["--beats-from", "files", "--tracks", "bass,drums", "--out"])
        .arg(&report_path)
        .status()
        .unwrap()
        .success());

    let out = bin().arg("compare").arg(&report_path).arg(&report_path).output().unwrap();
    assert!(out.status.success());
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.contains("cbs"));
    assert!(table.contains("irs_bass"));
    assert!(table.contains("+0.000000"));
}

#[test]
fn report_aggregates_recomputable_from_rows() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SynthSpec {
        n_tracks: 3,
        jitter_sigma: 0.02,
        track_offsets: vec![0.0, 0.03, 0.06],
        drop_prob: 0.1,
        seed: 77,
        ..SynthSpec::default()
    };
    write_corpus(dir.path(), &spec, 12, true);
    let track_names = spec.track_names();
    let descs = dataset::scan_dataset(dir.path(), &track_names).unwrap();
    let opts = EvalOptions { track_names, ..EvalOptions::default() };
    let report = evaluate(
        &descs,
        &PipelineConfig::default(),
        &MetricsConfig::default(),
        &opts,
    )
    .unwrap();

    // Per-track IRS = mean of the row-level interval deviations.
    for track in &report.irs {
        let stds: Vec<f64> = report
            .rows
            .iter()
            .flat_map(|r| r.tracks.iter())
            .filter(|t| t.track == track.track)
            .filter_map(|t| t.ibi_std)
            .collect();
        match track.value {
            Some(value) => {
                let recomputed = stds.iter().sum::<f64>() / stds.len() as f64;
                assert!(
                    (value - recomputed).abs() < 1e-9,
                    "irs {}: {value} vs rows {recomputed}",
                    track.track
                );
                assert_eq!(stds.len(), track.samples_used);
            }
            None => assert!(stds.is_empty()),
        }
    }

    // CBS = mean of the row-level coverage ratios.
    let ratios: Vec<f64> = report.rows.iter().filter_map(|r| r.cbs).collect();
    let recomputed = ratios.iter().sum::<f64>() / ratios.len() as f64;
    assert!((report.cbs.value.unwrap() - recomputed).abs() < 1e-9);

    // CBD = pooled statistics of the row-level error pools.
    let mut pool: Vec<f64> =
        report.rows.iter().flat_map(|r| r.cbd_errors.iter().copied()).collect();
    assert_eq!(pool.len(), report.cbd.pool_size);
    let stats = rhythmeter_core::metrics::pooled_stats(&mut pool).unwrap();
    let reported = report.cbd.stats.unwrap();
    assert!((stats.mean - reported.mean).abs() < 1e-9);
    assert!((stats.std - reported.std).abs() < 1e-9);
    assert!((stats.median - reported.median).abs() < 1e-9);

    // Histogram conserves the pool.
    assert_eq!(
        report.error_histogram.iter().sum::<u64>() as usize,
        report.cbd.pool_size
    );
}

#[test]
fn sweep_report_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for (name, seed) in [("a", 21u64), ("b", 22)] {
        let spec = SynthSpec {
            n_tracks: 2,
            jitter_sigma: if name == "a" { 0.01 } else { 0.04 },
            seed,
            ..SynthSpec::default()
        };
        write_corpus(&dir.path().join(name), &spec, 3, false);
    }

    let track_names: Vec<String> = vec!["bass".into(), "drums".into()];
    let methods: Vec<(String, Vec<dataset::SampleDescriptor>)> = ["a", "b"]
        .iter()
        .map(|name| {
            let descs =
                dataset::scan_dataset(&dir.path().join(name), &track_names).unwrap();
            (name.to_string(), descs)
        })
        .collect();
    let opts = EvalOptions {
        track_names,
        beats_source: BeatsSource::Files,
        ..EvalOptions::default()
    };
    let grid =
        [GridSetting { fps: 100.0, tl: 50.0 }, GridSetting { fps: 150.0, tl: 100.0 }];

    let run = || {
        let report = sweep::sweep(
            &methods,
            &grid,
            &PipelineConfig::default(),
            &MetricsConfig::default(),
            &opts,
        )
        .unwrap();
        serde_json::to_string_pretty(&report).unwrap()
    };
    assert_eq!(run(), run());
}
