//! Log-mel spectrograms and the spectral-flux onset envelope.
//!
//! The envelope produced here is the tracker's observation function: a
//! non-negative per-frame score of transient energy increase. It is
//! half-wave-rectified spectral flux on a log-compressed mel spectrogram,
//! with a 0.5 s local mean subtracted to suppress slow loudness drift.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::audio::AudioClip;

/// Errors from the spectrogram / onset stage.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DspError {
    /// The analysis window does not fit even into the padded signal.
    #[error("window of {window} samples exceeds padded signal length {padded}")]
    WindowTooLarge {
        /// Requested window length in samples.
        window: usize,
        /// Padded signal length in samples.
        padded: usize,
    },
    /// `fmin >= fmax` or the band exceeds Nyquist.
    #[error("invalid mel band: fmin {fmin} .. fmax {fmax} at rate {rate}")]
    InvalidBand {
        /// Lower band edge in Hz.
        fmin: f64,
        /// Upper band edge in Hz.
        fmax: f64,
        /// Clip sample rate in Hz.
        rate: u32,
    },
    /// Window, hop, or mel count is out of range.
    #[error("invalid spectrogram config: window {window}, hop {hop}, n_mels {n_mels}")]
    InvalidConfig {
        /// Window length in samples.
        window: usize,
        /// Hop in samples.
        hop: usize,
        /// Number of mel bands.
        n_mels: usize,
    },
    /// Fewer than two frames; flux needs a predecessor frame.
    #[error("spectrogram has {0} frames, need at least 2")]
    TooFewFrames(usize),
    /// Requested envelope frame rate is not positive.
    #[error("envelope frame rate must be positive")]
    InvalidRate,
}

/// STFT and mel filterbank parameters.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpectrogramConfig {
    /// Analysis window length in samples.
    pub window: usize,
    /// Hop between frames in samples.
    pub hop: usize,
    /// Number of mel bands.
    pub n_mels: usize,
    /// Lower filterbank edge in Hz.
    pub fmin: f64,
    /// Upper filterbank edge in Hz.
    pub fmax: f64,
}

impl Default for SpectrogramConfig {
    fn default() -> Self {
        Self { window: 1024, hop: 160, n_mels: 64, fmin: 0.0, fmax: 8000.0 }
    }
}

/// A log-mel magnitude spectrogram.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    /// One row per frame, `n_mels` log-magnitudes each. All values >= 0.
    pub frames: Vec<Vec<f64>>,
    /// Hop in samples.
    pub hop: usize,
    /// Window length in samples.
    pub window: usize,
    /// Sample rate of the source clip in Hz.
    pub sample_rate: u32,
}

impl Spectrogram {
    /// Frames per second of the frame grid.
    pub fn fps(&self) -> f64 {
        self.sample_rate as f64 / self.hop as f64
    }
}

/// A non-negative onset-strength series on a uniform frame grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OnsetEnvelope {
    /// Onset strength per frame, all >= 0.
    pub values: Vec<f64>,
    /// Frames per second. Real-valued; exact value used in all conversions.
    pub fps: f64,
}

/// Center frequencies in Hz of an HTK-mel triangular filterbank.
///
/// Useful as an oracle when checking which band a known tone lands in.
pub fn mel_frequencies(n_mels: usize, fmin: f64, fmax: f64) -> Vec<f64> {
    let lo = hz_to_mel(fmin);
    let hi = hz_to_mel(fmax);
    (1..=n_mels)
        .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (n_mels + 1) as f64))
        .collect()
}

/// Computes a log-compressed mel magnitude spectrogram.
///
/// The signal is reflect-padded by `window / 2` on both sides, so frame `t`
/// is centered on sample `t * hop` and the frame count is
/// `1 + (len_padded - window) / hop`. Each Hann-windowed frame is projected
/// through triangular HTK-mel filters and compressed as `ln(1 + m)`.
pub fn stft_mel(clip: &AudioClip, cfg: &SpectrogramConfig) -> Result<Spectrogram, DspError> {
    if cfg.hop == 0 || cfg.window < cfg.hop || cfg.n_mels == 0 {
        return Err(DspError::InvalidConfig {
            window: cfg.window,
            hop: cfg.hop,
            n_mels: cfg.n_mels,
        });
    }
    let nyquist = clip.sample_rate as f64 / 2.0;
    if !(cfg.fmin >= 0.0 && cfg.fmin < cfg.fmax && cfg.fmax <= nyquist) {
        return Err(DspError::InvalidBand {
            fmin: cfg.fmin,
            fmax: cfg.fmax,
            rate: clip.sample_rate,
        });
    }

    let pad = cfg.window / 2;
    let padded = clip.samples.len() + 2 * pad;
    if cfg.window > padded || clip.samples.is_empty() {
        return Err(DspError::WindowTooLarge { window: cfg.window, padded });
    }
    let n_frames = 1 + (padded - cfg.window) / cfg.hop;

    let fft_size = cfg.window.next_power_of_two();
    let fft = Fft::new(fft_size);
    let n_bins = fft_size / 2 + 1;
    let hann: Vec<f64> = (0..cfg.window)
        .map(|i| 0.5 - 0.5 * (2.0 * core::f64::consts::PI * i as f64 / cfg.window as f64).cos())
        .collect();
    let bank = mel_bank(cfg.n_mels, cfg.fmin, cfg.fmax, clip.sample_rate, fft_size);

    let src = &clip.samples;
    let mut re = vec![0.0f64; fft_size];
    let mut im = vec![0.0f64; fft_size];
    let mut mags = vec![0.0f64; n_bins];
    let mut frames = Vec::with_capacity(n_frames);
    for t in 0..n_frames {
        let start = (t * cfg.hop) as isize - pad as isize;
        for i in 0..cfg.window {
            re[i] = sample_reflected(src, start + i as isize) * hann[i];
        }
        re[cfg.window..].fill(0.0);
        im.fill(0.0);
        fft.process(&mut re, &mut im);
        for (k, mag) in mags.iter_mut().enumerate() {
            *mag = (re[k] * re[k] + im[k] * im[k]).sqrt();
        }

        let mut row = Vec::with_capacity(cfg.n_mels);
        for (start_bin, weights) in &bank {
            let mut m = 0.0;
            for (off, w) in weights.iter().enumerate() {
                m += w * mags[start_bin + off];
            }
            row.push((1.0 + m).ln());
        }
        frames.push(row);
    }

    Ok(Spectrogram {
        frames,
        hop: cfg.hop,
        window: cfg.window,
        sample_rate: clip.sample_rate,
    })
}

/// Half-wave-rectified spectral flux with local-mean removal.
///
/// `values[t]` sums the positive per-band increases from frame `t - 1` to
/// `t`; `values[0]` is 0. A centered 0.5 s moving average is then subtracted
/// and values are re-rectified at zero.
pub fn onset_envelope(spec: &Spectrogram) -> Result<OnsetEnvelope, DspError> {
    let n = spec.frames.len();
    if n < 2 {
        return Err(DspError::TooFewFrames(n));
    }
    let fps = spec.fps();

    let mut values = Vec::with_capacity(n);
    values.push(0.0f64);
    for t in 1..n {
        let mut flux = 0.0;
        for (cur, prev) in spec.frames[t].iter().zip(&spec.frames[t - 1]) {
            let d = cur - prev;
            if d > 0.0 {
                flux += d;
            }
        }
        values.push(flux);
    }

    // Centered moving average over 0.5 s, truncated at the edges.
    let half = (0.25 * fps).round() as usize;
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0f64);
    for &v in &values {
        let last = *prefix.last().unwrap();
        prefix.push(last + v);
    }
    let smoothed: Vec<f64> = (0..n)
        .map(|t| {
            let lo = t.saturating_sub(half);
            let hi = (t + half + 1).min(n);
            let mean = (prefix[hi] - prefix[lo]) / (hi - lo) as f64;
            (values[t] - mean).max(0.0)
        })
        .collect();

    Ok(OnsetEnvelope { values: smoothed, fps })
}

/// Linearly interpolates an envelope onto a new frame grid.
///
/// The output holds `round(len * target_fps / fps)` frames; a matching rate
/// is a bit-exact pass-through.
pub fn resample_envelope(env: &OnsetEnvelope, target_fps: f64) -> Result<OnsetEnvelope, DspError> {
    if !(target_fps > 0.0) {
        return Err(DspError::InvalidRate);
    }
    if target_fps == env.fps || env.values.is_empty() {
        return Ok(OnsetEnvelope { values: env.values.clone(), fps: target_fps });
    }
    let n = env.values.len();
    let out_len = ((n as f64) * target_fps / env.fps).round() as usize;
    let ratio = env.fps / target_fps;
    let values = (0..out_len)
        .map(|j| {
            let pos = j as f64 * ratio;
            let i0 = (pos.floor() as usize).min(n - 1);
            let i1 = (i0 + 1).min(n - 1);
            let frac = pos - i0 as f64;
            env.values[i0] * (1.0 - frac) + env.values[i1] * frac
        })
        .collect();
    Ok(OnsetEnvelope { values, fps: target_fps })
}

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10.0f64.powf(m / 2595.0) - 1.0)
}

/// Triangular filters as `(first_bin, weights)` pairs, peak weight 1.
fn mel_bank(
    n_mels: usize,
    fmin: f64,
    fmax: f64,
    sample_rate: u32,
    fft_size: usize,
) -> Vec<(usize, Vec<f64>)> {
    let n_bins = fft_size / 2 + 1;
    let bin_hz = sample_rate as f64 / fft_size as f64;
    let lo = hz_to_mel(fmin);
    let hi = hz_to_mel(fmax);
    let edges: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (n_mels + 1) as f64))
        .collect();

    (0..n_mels)
        .map(|m| {
            let (left, center, right) = (edges[m], edges[m + 1], edges[m + 2]);
            let first = (left / bin_hz).ceil() as usize;
            let last = ((right / bin_hz).floor() as usize).min(n_bins - 1);
            let weights = (first..=last)
                .map(|k| {
                    let f = k as f64 * bin_hz;
                    let w = if f <= center {
                        (f - left) / (center - left)
                    } else {
                        (right - f) / (right - center)
                    };
                    w.max(0.0)
                })
                .collect();
            (first.min(n_bins - 1), weights)
        })
        .collect()
}

/// Index into `src` with reflection at both ends (edge sample not repeated).
fn sample_reflected(src: &[f32], idx: isize) -> f64 {
    let n = src.len() as isize;
    if n == 1 {
        return src[0] as f64;
    }
    let period = 2 * (n - 1);
    let mut i = idx.rem_euclid(period);
    if i >= n {
        i = period - i;
    }
    src[i as usize] as f64
}

/// Iterative radix-2 FFT with a per-instance twiddle table.
///
/// rustfft needs `std`, and this crate only ever transforms power-of-two
/// windows, so a minimal in-crate transform keeps the core `no_std`. The
/// unit tests pin it against a direct DFT.
struct Fft {
    n: usize,
    // cos/sin of -2*pi*k/n for k in 0..n/2
    twiddles: Vec<(f64, f64)>,
}

impl Fft {
    fn new(n: usize) -> Self {
        debug_assert!(n.is_power_of_two());
        let twiddles = (0..n / 2)
            .map(|k| {
                let ang = -2.0 * core::f64::consts::PI * k as f64 / n as f64;
                (ang.cos(), ang.sin())
            })
            .collect();
        Self { n, twiddles }
    }

    fn process(&self, re: &mut [f64], im: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(re.len(), n);

        // Bit-reversal permutation.
        let mut j = 0usize;
        for i in 0..n {
            if i < j {
                re.swap(i, j);
                im.swap(i, j);
            }
            let mut bit = n >> 1;
            while bit > 0 && j & bit != 0 {
                j ^= bit;
                bit >>= 1;
            }
            j |= bit;
        }

        let mut len = 2;
        while len <= n {
            let stride = n / len;
            let half = len / 2;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let (wr, wi) = self.twiddles[k * stride];
                    let (ar, ai) = (re[start + k], im[start + k]);
                    let (br, bi) = (re[start + k + half], im[start + k + half]);
                    let tr = br * wr - bi * wi;
                    let ti = br * wi + bi * wr;
                    re[start + k] = ar + tr;
                    im[start + k] = ai + ti;
                    re[start + k + half] = ar - tr;
                    im[start + k + half] = ai - ti;
                }
            }
            len <<= 1;
        }
    }
}
