//! RIFF/WAVE reading and writing.
//!
//! Input may be PCM-16, PCM-24, PCM-32, or IEEE float-32, mono or
//! multi-channel; channels are downmixed by arithmetic mean and integer
//! samples are scaled to `[-1, 1]` by the type's maximum magnitude.
//! Generated stems are written as float-32, which round-trips the in-memory
//! samples exactly.

use std::io;
use std::path::Path;

use rhythmeter_core::AudioClip;

/// Errors from WAV decoding and encoding.
#[derive(Debug, thiserror::Error)]
pub enum WavError {
    /// The file does not exist.
    #[error("missing file: {0}")]
    MissingFile(String),
    /// Compressed or otherwise unsupported sample encoding.
    #[error("unsupported encoding in {path}: {detail}")]
    UnsupportedEncoding {
        /// Offending file.
        path: String,
        /// What was unsupported.
        detail: String,
    },
    /// Malformed RIFF/WAVE structure.
    #[error("corrupt header in {path}: {detail}")]
    CorruptHeader {
        /// Offending file.
        path: String,
        /// Decoder diagnostic.
        detail: String,
    },
    /// Any other I/O failure.
    #[error("i/o error on {path}: {source}")]
    Io {
        /// Offending file.
        path: String,
        /// Underlying error.
        #[source]
        source: io::Error,
    },
}

/// Decodes a WAV file into a mono clip.
pub fn load_wav(path: &Path) -> Result<AudioClip, WavError> {
    let display = path.display().to_string();
    let reader = hound::WavReader::open(path).map_err(|e| match e {
        hound::Error::IoError(io_err) if io_err.kind() == io::ErrorKind::NotFound => {
            WavError::MissingFile(display.clone())
        }
        hound::Error::IoError(io_err) => WavError::Io { path: display.clone(), source: io_err },
        hound::Error::FormatError(detail) => {
            WavError::CorruptHeader { path: display.clone(), detail: detail.to_string() }
        }
        hound::Error::Unsupported => WavError::UnsupportedEncoding {
            path: display.clone(),
            detail: "compressed or non-PCM data".into(),
        },
        other => WavError::CorruptHeader { path: display.clone(), detail: other.to_string() },
    })?;

    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(WavError::CorruptHeader { path: display, detail: "zero channels".into() });
    }

    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Float, 32) => collect_samples::<f32>(reader, &display, |s| s as f64)?,
        (hound::SampleFormat::Int, 16) => {
            collect_samples::<i16>(reader, &display, |s| s as f64 / 32768.0)?
        }
        (hound::SampleFormat::Int, 24) => {
            collect_samples::<i32>(reader, &display, |s| s as f64 / 8388608.0)?
        }
        (hound::SampleFormat::Int, 32) => {
            collect_samples::<i32>(reader, &display, |s| s as f64 / 2147483648.0)?
        }
        (format, bits) => {
            return Err(WavError::UnsupportedEncoding {
                path: display,
                detail: format!("{format:?} at {bits} bits"),
            })
        }
    };

    let mut samples = Vec::with_capacity(interleaved.len() / channels);
    for frame in interleaved.chunks_exact(channels) {
        samples.push((frame.iter().sum::<f64>() / channels as f64) as f32);
    }

    let mut clip = AudioClip::new(samples, spec.sample_rate)
        .map_err(|_| WavError::CorruptHeader { path: display, detail: "zero sample rate".into() })?;
    clip.label = path.file_stem().map(|s| s.to_string_lossy().into_owned());
    Ok(clip)
}

fn collect_samples<S: hound::Sample>(
    mut reader: hound::WavReader<io::BufReader<std::fs::File>>,
    path: &str,
    convert: impl Fn(S) -> f64,
) -> Result<Vec<f64>, WavError> {
    reader
        .samples::<S>()
        .map(|s| {
            s.map(&convert).map_err(|e| WavError::CorruptHeader {
                path: path.to_string(),
                detail: e.to_string(),
            })
        })
        .collect()
}

/// Writes a mono clip as float-32 WAV.
pub fn write_wav(path: &Path, clip: &AudioClip) -> Result<(), WavError> {
    let display = path.display().to_string();
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate,
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let io_err = |e: hound::Error| match e {
        hound::Error::IoError(source) => WavError::Io { path: display.clone(), source },
        other => WavError::CorruptHeader { path: display.clone(), detail: other.to_string() },
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(io_err)?;
    for &s in &clip.samples {
        writer.write_sample(s).map_err(io_err)?;
    }
    writer.finalize().map_err(io_err)?;
    Ok(())
}
