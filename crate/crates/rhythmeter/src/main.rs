use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use rhythmeter::dataset::{self, DEFAULT_TRACKS};
use rhythmeter::evaluate::{evaluate, EvalOptions};
use rhythmeter::report::{self, BeatsSource, MetricsReport, ReportFormat};
use rhythmeter::sweep::{self, GridSetting, RankMetric};
use rhythmeter::wav;
use rhythmeter_core::metrics::UnmatchedPolicy;
use rhythmeter_core::synth::{self, SynthSpec};
use rhythmeter_core::{audio, pipeline, MetricsConfig, PipelineConfig, SpectrogramConfig, TrackerConfig};

/// Exit code when evaluation ran but no sample qualified for any metric.
const EXIT_NO_QUALIFYING: u8 = 2;

#[derive(Parser)]
#[command(
    name = "rhythmeter",
    version,
    about = "Rhythmic stability and cross-track synchronization analysis for multi-track audio"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug, Clone)]
struct FrontendArgs {
    /// STFT window length in samples.
    #[arg(long, default_value_t = 1024)]
    window: usize,
    /// STFT hop in samples.
    #[arg(long, default_value_t = 160)]
    hop: usize,
    /// Mel band count.
    #[arg(long = "n-mels", default_value_t = 64)]
    n_mels: usize,
}

#[derive(clap::Args, Debug, Clone)]
struct TrackerArgs {
    /// Envelope frame rate in Hz.
    #[arg(long, default_value_t = 150.0)]
    fps: f64,
    /// Transition lambda (tempo-smoothness weight).
    #[arg(long, default_value_t = 100.0)]
    tl: f64,
    /// Lower tempo bound in BPM.
    #[arg(long = "bpm-min", default_value_t = 55.0)]
    bpm_min: f64,
    /// Upper tempo bound in BPM.
    #[arg(long = "bpm-max", default_value_t = 215.0)]
    bpm_max: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a dataset of per-sample stem directories.
    Analyze {
        /// Dataset root: one directory per sample.
        dir: PathBuf,
        #[command(flatten)]
        tracker: TrackerArgs,
        #[command(flatten)]
        frontend: FrontendArgs,
        /// Segment length in seconds, or "full" for whole files.
        #[arg(long, default_value = "10.24")]
        segment: String,
        /// Report format.
        #[arg(long, value_parser = ["json", "csv"], default_value = "json")]
        format: String,
        /// Beat source: the audio pipeline or `<track>.beats.txt` files.
        #[arg(long = "beats-from", value_parser = ["tracker", "files"], default_value = "tracker")]
        beats_from: String,
        /// Comma-separated stem names.
        #[arg(long, value_delimiter = ',')]
        tracks: Vec<String>,
        /// CBS window length in seconds.
        #[arg(long = "cbs-window", default_value_t = 0.1)]
        cbs_window: f64,
        /// CBD treatment of unmatched reference beats.
        #[arg(long = "cbd-unmatched", value_parser = ["skip", "penalize"], default_value = "skip")]
        cbd_unmatched: String,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Track one WAV file and print beat times, one per line.
    Beats {
        /// Input WAV file.
        file: PathBuf,
        #[command(flatten)]
        tracker: TrackerArgs,
        #[command(flatten)]
        frontend: FrontendArgs,
    },
    /// Generate synthetic click stems with ground-truth annotations.
    Synth {
        /// JSON file holding the generator spec.
        #[arg(long)]
        spec: PathBuf,
        /// Output dataset root.
        #[arg(long)]
        out: PathBuf,
        /// Number of samples (seeds seed, seed+1, ...).
        #[arg(long, default_value_t = 1)]
        samples: usize,
    },
    /// Evaluate several methods across a tracker-hyperparameter grid.
    Sweep {
        /// Method datasets as name=dir, repeatable.
        #[arg(long = "methods", required = true)]
        methods: Vec<String>,
        /// Grid: "default" or comma-separated fps:tl pairs, e.g. "100:50,150:100".
        #[arg(long, default_value = "default")]
        grid: String,
        /// Beat source for every evaluation.
        #[arg(long = "beats-from", value_parser = ["tracker", "files"], default_value = "tracker")]
        beats_from: String,
        /// Segment length in seconds, or "full".
        #[arg(long, default_value = "10.24")]
        segment: String,
        /// Comma-separated stem names.
        #[arg(long, value_delimiter = ',')]
        tracks: Vec<String>,
        /// Write the sweep report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a side-by-side comparison of two JSON reports.
    Compare {
        /// Baseline report.
        left: PathBuf,
        /// Candidate report.
        right: PathBuf,
    },
}

fn main() -> ExitCode {
    init_thread_pool();
    match run() {
        Ok(code) => code,
        Err(err) => {
            // A closed stdout (e.g. piping into head) is not a failure.
            if let Some(io_err) = err.downcast_ref::<std::io::Error>() {
                if io_err.kind() == std::io::ErrorKind::BrokenPipe {
                    return ExitCode::SUCCESS;
                }
            }
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

/// RHYTHMETER_THREADS caps the rayon pool; unset means one thread per core.
fn init_thread_pool() {
    if let Ok(value) = std::env::var("RHYTHMETER_THREADS") {
        if let Ok(threads) = value.parse::<usize>() {
            if threads > 0 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
            }
        }
    }
}

fn run() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Analyze {
            dir,
            tracker,
            frontend,
            segment,
            format,
            beats_from,
            tracks,
            cbs_window,
            cbd_unmatched,
            out,
        } => {
            let track_names = track_names_or_default(tracks);
            let pipeline_cfg = pipeline_config(&tracker, &frontend);
            let metrics_cfg = MetricsConfig {
                cbs_window,
                cbd_unmatched: match cbd_unmatched.as_str() {
                    "penalize" => UnmatchedPolicy::Penalize,
                    _ => UnmatchedPolicy::Skip,
                },
                ..MetricsConfig::default()
            };
            let opts = EvalOptions {
                track_names: track_names.clone(),
                segment_seconds: parse_segment(&segment)?,
                beats_source: parse_beats_source(&beats_from),
                target_sample_rate: 16000,
            };

            let descriptors = dataset::scan_dataset(&dir, &track_names)?;
            let report = evaluate(&descriptors, &pipeline_cfg, &metrics_cfg, &opts)?;

            let format =
                if format == "csv" { ReportFormat::Csv } else { ReportFormat::Json };
            write_out(|w| report::write_report(&report, format, w), out.as_deref())?;
            Ok(exit_code_for(&report))
        }
        Command::Beats { file, tracker, frontend } => {
            let pipeline_cfg = pipeline_config(&tracker, &frontend);
            let clip = wav::load_wav(&file)?;
            let clip = audio::resample(&clip, 16000)?;
            let beats = pipeline::track_clip(&clip, &pipeline_cfg)?;
            let mut stdout = std::io::stdout().lock();
            for &t in beats.times() {
                writeln!(stdout, "{t:.6}")?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Synth { spec, out, samples } => {
            let text = fs::read_to_string(&spec)
                .with_context(|| format!("reading {}", spec.display()))?;
            let spec: SynthSpec = serde_json::from_str(&text)
                .with_context(|| "parsing synth spec JSON")?;
            let corpus = synth::corpus(&spec, samples)?;
            for gt in &corpus {
                let dir = out.join(gt.sample.sample_id());
                fs::create_dir_all(&dir)
                    .with_context(|| format!("creating {}", dir.display()))?;
                for (name, clip) in &gt.audio {
                    wav::write_wav(&dir.join(format!("{name}.wav")), clip)?;
                }
                for (name, beats) in gt.sample.tracks() {
                    dataset::write_beats_file(
                        &dir.join(format!("{name}.beats.txt")),
                        beats.times(),
                    )?;
                }
            }
            eprintln!("wrote {} samples under {}", corpus.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep { methods, grid, beats_from, segment, tracks, out } => {
            let track_names = track_names_or_default(tracks);
            let opts = EvalOptions {
                track_names: track_names.clone(),
                segment_seconds: parse_segment(&segment)?,
                beats_source: parse_beats_source(&beats_from),
                target_sample_rate: 16000,
            };

            let mut method_descs = Vec::new();
            for entry in &methods {
                let (name, dir) = entry
                    .split_once('=')
                    .with_context(|| format!("--methods entry {entry:?} is not name=dir"))?;
                let descriptors = dataset::scan_dataset(Path::new(dir), &track_names)?;
                method_descs.push((name.to_string(), descriptors));
            }

            let grid = parse_grid(&grid)?;
            let report = sweep::sweep(
                &method_descs,
                &grid,
                &PipelineConfig::default(),
                &MetricsConfig::default(),
                &opts,
            )?;

            for metric in RankMetric::ALL {
                match sweep::rank_consistency(&report, metric) {
                    Ok(c) => eprintln!(
                        "{metric}: consistent={} min_tau={:.4} over {} settings",
                        c.consistent, c.min_kendall_tau, c.settings_used
                    ),
                    Err(e) => eprintln!("{metric}: {e}"),
                }
            }

            let mut body = serde_json::to_string_pretty(&report)?;
            body.push('\n');
            write_out(
                |w| {
                    w.write_all(body.as_bytes())?;
                    Ok(())
                },
                out.as_deref(),
            )?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Compare { left, right } => {
            let parse = |path: &Path| -> Result<MetricsReport> {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                report::from_json(&text)
                    .with_context(|| format!("parsing {}", path.display()))
            };
            let table = report::comparison_table(&parse(&left)?, &parse(&right)?);
            print!("{table}");
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn pipeline_config(tracker: &TrackerArgs, frontend: &FrontendArgs) -> PipelineConfig {
    PipelineConfig {
        spectrogram: SpectrogramConfig {
            window: frontend.window,
            hop: frontend.hop,
            n_mels: frontend.n_mels,
            ..SpectrogramConfig::default()
        },
        tracker: TrackerConfig {
            fps: tracker.fps,
            transition_lambda: tracker.tl,
            bpm_min: tracker.bpm_min,
            bpm_max: tracker.bpm_max,
            ..TrackerConfig::default()
        },
    }
}

fn track_names_or_default(tracks: Vec<String>) -> Vec<String> {
    if tracks.is_empty() {
        DEFAULT_TRACKS.iter().map(|s| s.to_string()).collect()
    } else {
        tracks
    }
}

fn parse_segment(value: &str) -> Result<Option<f64>> {
    if value.eq_ignore_ascii_case("full") {
        return Ok(None);
    }
    let secs: f64 = value.parse().with_context(|| format!("bad --segment {value:?}"))?;
    if !secs.is_finite() || secs <= 0.0 {
        bail!("--segment must be positive or \"full\"");
    }
    Ok(Some(secs))
}

fn parse_beats_source(value: &str) -> BeatsSource {
    match value {
        "files" => BeatsSource::Files,
        _ => BeatsSource::Tracker,
    }
}

fn parse_grid(value: &str) -> Result<Vec<GridSetting>> {
    if value == "default" {
        return Ok(sweep::default_grid());
    }
    let mut grid = Vec::new();
    for pair in value.split(',') {
        let (fps, tl) = pair
            .split_once(':')
            .with_context(|| format!("grid cell {pair:?} is not fps:tl"))?;
        grid.push(GridSetting { fps: fps.trim().parse()?, tl: tl.trim().parse()? });
    }
    Ok(grid)
}

fn write_out(
    write: impl FnOnce(&mut dyn Write) -> Result<()>,
    out: Option<&Path>,
) -> Result<()> {
    match out {
        Some(path) => {
            let mut file = fs::File::create(path)
                .with_context(|| format!("creating {}", path.display()))?;
            write(&mut file)
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            write(&mut stdout)
        }
    }
}

/// Exit 2 when evaluation completed but not a single sample qualified for
/// any metric; 0 otherwise.
fn exit_code_for(report: &MetricsReport) -> ExitCode {
    let any_defined = report.irs.iter().any(|t| t.value.is_some())
        || report.cbs.value.is_some()
        || report.cbd.stats.is_some();
    if any_defined {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_NO_QUALIFYING)
    }
}
