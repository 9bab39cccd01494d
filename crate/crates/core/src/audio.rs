//! Clip representation, resampling, segmentation, and stem mixing.

use alloc::vec;
use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

/// Errors from clip-level operations.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AudioError {
    /// Sample rate is zero.
    #[error("sample rate must be positive")]
    InvalidRate,
    /// Segment length is not positive or rounds to zero samples.
    #[error("segment length must cover at least one sample")]
    InvalidLength,
    /// Clips passed to `mix` differ in sample count.
    #[error("clips differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    /// Clips passed to `mix` differ in sample rate.
    #[error("clips differ in sample rate: {0} vs {1}")]
    RateMismatch(u32, u32),
    /// An empty clip list was given where at least one clip is required.
    #[error("no input clips")]
    EmptyInput,
}

/// A mono audio clip: normalized float samples at a fixed sample rate.
///
/// Samples are nominally in `[-1, 1]`; `mix` can push them outside that
/// range, which is deliberate (no clipping or normalization is applied
/// anywhere in this crate). Duration is always derived from the sample
/// count, never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    /// Mono samples.
    pub samples: Vec<f32>,
    /// Sample rate in Hz. Always positive.
    pub sample_rate: u32,
    /// Optional track name, e.g. the stem this clip came from.
    pub label: Option<String>,
}

impl AudioClip {
    /// Creates a clip, rejecting a zero sample rate.
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Result<Self, AudioError> {
        if sample_rate == 0 {
            return Err(AudioError::InvalidRate);
        }
        Ok(Self { samples, sample_rate, label: None })
    }

    /// Same as [`AudioClip::new`] with a track label attached.
    pub fn with_label(
        samples: Vec<f32>,
        sample_rate: u32,
        label: impl Into<String>,
    ) -> Result<Self, AudioError> {
        let mut clip = Self::new(samples, sample_rate)?;
        clip.label = Some(label.into());
        Ok(clip)
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// True if the clip holds no samples.
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Duration in seconds, derived from the sample count.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// Zero crossings per side of the resampling kernel at unity cutoff.
const SINC_TAPS: usize = 32;

/// Resamples a clip to `target_rate` by windowed-sinc interpolation.
///
/// The output holds `round(len * target_rate / sample_rate)` samples. Each
/// output sample evaluates a Blackman-windowed sinc centered at its exact
/// rational source position; when downsampling the kernel is stretched so
/// the cutoff sits at the target Nyquist. Matching rates are a bit-exact
/// pass-through.
pub fn resample(clip: &AudioClip, target_rate: u32) -> Result<AudioClip, AudioError> {
    if target_rate == 0 {
        return Err(AudioError::InvalidRate);
    }
    if target_rate == clip.sample_rate {
        return Ok(clip.clone());
    }

    let src_rate = clip.sample_rate as u64;
    let dst_rate = target_rate as u64;
    let len = clip.samples.len() as u128;
    let out_len = ((2 * len * dst_rate as u128 + src_rate as u128) / (2 * src_rate as u128)) as usize;

    // Reduced ratio so source positions stay exact integers + fraction.
    let g = gcd(src_rate, dst_rate);
    let step_num = src_rate / g;
    let step_den = dst_rate / g;

    let cutoff = if dst_rate < src_rate {
        dst_rate as f64 / src_rate as f64
    } else {
        1.0
    };
    let half_width = if cutoff < 1.0 {
        (SINC_TAPS as f64 / cutoff).ceil() as i64
    } else {
        SINC_TAPS as i64
    };

    let src = &clip.samples;
    let n = src.len() as i64;
    let mut out = Vec::with_capacity(out_len);
    for i in 0..out_len as u64 {
        let pos_int = (i * step_num / step_den) as i64;
        let pos_frac = (i * step_num % step_den) as f64 / step_den as f64;

        let mut acc = 0.0f64;
        let mut norm = 0.0f64;
        for j in (pos_int - half_width)..=(pos_int + half_width + 1) {
            let dt = j as f64 - (pos_int as f64 + pos_frac);
            let u = dt / half_width as f64;
            if !(-1.0..=1.0).contains(&u) {
                continue;
            }
            let w = blackman(u) * sinc(cutoff * dt) * cutoff;
            norm += w;
            if (0..n).contains(&j) {
                acc += w * src[j as usize] as f64;
            }
        }
        // Per-position unit DC gain; removes passband ripple of the
        // truncated kernel.
        out.push(if norm != 0.0 { (acc / norm) as f32 } else { 0.0 });
    }

    Ok(AudioClip {
        samples: out,
        sample_rate: target_rate,
        label: clip.label.clone(),
    })
}

/// Splits a clip into non-overlapping segments of `segment_seconds` starting
/// at t = 0. A trailing remainder shorter than one segment is dropped.
pub fn segment(clip: &AudioClip, segment_seconds: f64) -> Result<Vec<AudioClip>, AudioError> {
    if !(segment_seconds > 0.0) {
        return Err(AudioError::InvalidLength);
    }
    let seg_len = (segment_seconds * clip.sample_rate as f64).round() as usize;
    if seg_len == 0 {
        return Err(AudioError::InvalidLength);
    }
    Ok(clip
        .samples
        .chunks_exact(seg_len)
        .map(|chunk| AudioClip {
            samples: chunk.to_vec(),
            sample_rate: clip.sample_rate,
            label: clip.label.clone(),
        })
        .collect())
}

/// Sums clips sample-wise into one mixture clip.
///
/// All clips must share length and sample rate. Summation runs left to
/// right over the input list, one sample position at a time, so the result
/// is reproducible bit for bit. No normalization or clipping is applied;
/// the mixture may exceed `[-1, 1]`.
pub fn mix(clips: &[AudioClip]) -> Result<AudioClip, AudioError> {
    let first = clips.first().ok_or(AudioError::EmptyInput)?;
    for clip in &clips[1..] {
        if clip.sample_rate != first.sample_rate {
            return Err(AudioError::RateMismatch(first.sample_rate, clip.sample_rate));
        }
        if clip.samples.len() != first.samples.len() {
            return Err(AudioError::LengthMismatch(first.samples.len(), clip.samples.len()));
        }
    }
    let mut samples = vec![0.0f32; first.samples.len()];
    for (i, out) in samples.iter_mut().enumerate() {
        for clip in clips {
            *out += clip.samples[i];
        }
    }
    Ok(AudioClip { samples, sample_rate: first.sample_rate, label: None })
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = core::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Blackman window on u in [-1, 1].
fn blackman(u: f64) -> f64 {
    let pu = core::f64::consts::PI * u;
    0.42 + 0.5 * pu.cos() + 0.08 * (2.0 * pu).cos()
}
