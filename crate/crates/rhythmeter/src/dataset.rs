//! Dataset layout: one directory per sample, stems named `<track>.wav`,
//! optional ground-truth annotations named `<track>.beats.txt` (one beat
//! time in seconds per line).

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufRead};
use std::path::{Path, PathBuf};

/// Default stem names, matching the common four-track split.
pub const DEFAULT_TRACKS: [&str; 4] = ["bass", "drums", "guitar", "piano"];

/// Errors from dataset scanning and annotation parsing.
#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    /// The root held no sample directories.
    #[error("no samples found under {0}")]
    NoSamplesFound(String),
    /// The root could not be read.
    #[error("cannot read {path}: {source}")]
    Io {
        /// Offending path.
        path: String,
        /// Underlying error.
        #[source]
        source: io::Error,
    },
    /// A beats file held a non-numeric or unordered line.
    #[error("bad beats file {path} line {line}: {detail}")]
    BadBeatsFile {
        /// Offending file.
        path: String,
        /// 1-based line number.
        line: usize,
        /// What was wrong.
        detail: String,
    },
}

/// One sample directory and the per-track files found in it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleDescriptor {
    /// Directory name, used as the sample id.
    pub sample_id: String,
    /// Stem WAV paths per configured track name; `None` when absent.
    pub stems: BTreeMap<String, Option<PathBuf>>,
    /// Annotation paths per configured track name; `None` when absent.
    pub beat_files: BTreeMap<String, Option<PathBuf>>,
}

impl SampleDescriptor {
    /// True if any configured track has a stem or an annotation file.
    pub fn has_any_track(&self) -> bool {
        self.stems.values().any(Option::is_some)
            || self.beat_files.values().any(Option::is_some)
    }
}

/// Walks the immediate subdirectories of `root` and describes every one
/// that holds at least one `<track>.wav` or `<track>.beats.txt` for the
/// given track names. Results are sorted by sample id.
pub fn scan_dataset(root: &Path, track_names: &[String]) -> Result<Vec<SampleDescriptor>, DatasetError> {
    let entries = fs::read_dir(root).map_err(|source| DatasetError::Io {
        path: root.display().to_string(),
        source,
    })?;

    let mut descriptors = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| DatasetError::Io {
            path: root.display().to_string(),
            source,
        })?;
        let dir = entry.path();
        if !dir.is_dir() {
            continue;
        }
        let sample_id = match dir.file_name() {
            Some(name) => name.to_string_lossy().into_owned(),
            None => continue,
        };

        let mut stems = BTreeMap::new();
        let mut beat_files = BTreeMap::new();
        for track in track_names {
            let wav = dir.join(format!("{track}.wav"));
            let beats = dir.join(format!("{track}.beats.txt"));
            stems.insert(track.clone(), wav.is_file().then_some(wav));
            beat_files.insert(track.clone(), beats.is_file().then_some(beats));
        }

        let descriptor = SampleDescriptor { sample_id, stems, beat_files };
        if descriptor.has_any_track() {
            descriptors.push(descriptor);
        }
    }

    if descriptors.is_empty() {
        return Err(DatasetError::NoSamplesFound(root.display().to_string()));
    }
    descriptors.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
    Ok(descriptors)
}

/// Reads one beat time per line; blank lines are ignored. Times must be
/// strictly increasing and non-negative.
pub fn read_beats_file(path: &Path) -> Result<Vec<f64>, DatasetError> {
    let display = path.display().to_string();
    let file = fs::File::open(path)
        .map_err(|source| DatasetError::Io { path: display.clone(), source })?;
    let mut times = Vec::new();
    for (i, line) in io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| DatasetError::Io { path: display.clone(), source })?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let t: f64 = trimmed.parse().map_err(|e| DatasetError::BadBeatsFile {
            path: display.clone(),
            line: i + 1,
            detail: format!("{e}"),
        })?;
        if !t.is_finite() || t < 0.0 {
            return Err(DatasetError::BadBeatsFile {
                path: display.clone(),
                line: i + 1,
                detail: format!("time {t} out of range"),
            });
        }
        if let Some(&last) = times.last() {
            if t <= last {
                return Err(DatasetError::BadBeatsFile {
                    path: display.clone(),
                    line: i + 1,
                    detail: format!("time {t} not after {last}"),
                });
            }
        }
        times.push(t);
    }
    Ok(times)
}

/// Writes beat times one per line with shortest-round-trip formatting, so
/// reading the file back reproduces the same `f64` values.
pub fn write_beats_file(path: &Path, times: &[f64]) -> Result<(), DatasetError> {
    use std::fmt::Write as _;
    let mut body = String::new();
    for &t in times {
        let _ = writeln!(body, "{t}");
    }
    fs::write(path, body).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn track_names() -> Vec<String> {
        DEFAULT_TRACKS.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn scans_samples_with_stems() {
        let dir = tempfile::tempdir().unwrap();
        for sample in ["s1", "s2", "s3"] {
            let d = dir.path().join(sample);
            fs::create_dir(&d).unwrap();
            for track in DEFAULT_TRACKS {
                fs::write(d.join(format!("{track}.wav")), b"").unwrap();
            }
        }
        let descs = scan_dataset(dir.path(), &track_names()).unwrap();
        assert_eq!(descs.len(), 3);
        assert_eq!(descs[0].sample_id, "s1");
        assert!(descs.iter().all(|d| d.stems.values().all(Option::is_some)));
    }

    #[test]
    fn missing_stem_flagged_absent() {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path().join("partial");
        fs::create_dir(&d).unwrap();
        for track in ["bass", "drums", "piano"] {
            fs::write(d.join(format!("{track}.wav")), b"").unwrap();
        }
        let descs = scan_dataset(dir.path(), &track_names()).unwrap();
        assert_eq!(descs.len(), 1);
        assert!(descs[0].stems["guitar"].is_none());
        assert!(descs[0].stems["bass"].is_some());
    }

    #[test]
    fn empty_root_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            scan_dataset(dir.path(), &track_names()),
            Err(DatasetError::NoSamplesFound(_))
        ));
    }

    #[test]
    fn beats_only_directory_qualifies() {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path().join("gt");
        fs::create_dir(&d).unwrap();
        fs::write(d.join("bass.beats.txt"), "0.5\n1.0\n").unwrap();
        fs::write(d.join("drums.beats.txt"), "0.5\n1.0\n").unwrap();
        let descs = scan_dataset(dir.path(), &track_names()).unwrap();
        assert_eq!(descs.len(), 1);
        assert!(descs[0].stems.values().all(Option::is_none));
        assert!(descs[0].beat_files["bass"].is_some());
    }

    #[test]
    fn beats_file_round_trips_exact_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.beats.txt");
        let times = vec![0.1, 0.5000000000000001, 1.0 / 3.0, 2.123456789012345]
            .into_iter()
            .scan(0.0, |acc, d| {
                *acc += d;
                Some(*acc)
            })
            .collect::<Vec<f64>>();
        write_beats_file(&path, &times).unwrap();
        assert_eq!(read_beats_file(&path).unwrap(), times);
    }

    #[test]
    fn bad_beats_files_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.beats.txt");
        fs::write(&path, "0.5\nnope\n").unwrap();
        assert!(matches!(
            read_beats_file(&path),
            Err(DatasetError::BadBeatsFile { line: 2, .. })
        ));
        fs::write(&path, "0.5\n0.4\n").unwrap();
        assert!(matches!(read_beats_file(&path), Err(DatasetError::BadBeatsFile { .. })));
        fs::write(&path, "-1.0\n").unwrap();
        assert!(matches!(read_beats_file(&path), Err(DatasetError::BadBeatsFile { .. })));
    }
}
