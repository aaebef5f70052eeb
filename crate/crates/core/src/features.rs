//! 39-dimensional MFCC + delta + delta-delta frame features and ground-truth
//! frame labels.
//!
//! The filterbank pipeline follows the defaults of the widely used
//! `python_speech_features` package (v0.6): pre-emphasis 0.97, rectangular
//! window, 512-point FFT, 26 mel filters, cepstral lifter 22, c0 replaced
//! by the log of the frame energy, deltas over two frames each side with
//! edge replication. Unlike that package, frames are never zero-padded past
//! the end of the signal.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use ndarray::{s, Array2, ArrayView2};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("invalid feature configuration: {0}")]
    Config(String),
    #[error("audio has {samples} samples, shorter than one {window}-sample window")]
    TooShort { samples: usize, window: usize },
    #[error("sample {0} is not finite")]
    NonFinite(usize),
    #[error("frame {frame} ({start:.4}-{end:.4} s) overlaps no segment")]
    Unlabeled { frame: usize, start: f64, end: f64 },
    #[error("invalid segment {index}: {message}")]
    Segment { index: usize, message: String },
    #[error("unsupported WAV: {0}")]
    Wav(String),
    #[error("feature dump: {0}")]
    Dump(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Number of coefficient blocks per frame (static, delta, delta-delta).
pub const BLOCKS: usize = 3;

pub const FEATURE_DUMP_MAGIC: &[u8; 9] = b"MAPSFEAT1";

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureConfig {
    pub sample_rate: u32,
    /// Analysis window, seconds.
    pub window_length: f64,
    /// Hop between frames, seconds.
    pub frame_step: f64,
    pub num_cepstra: usize,
    pub num_filters: usize,
    /// Raised automatically to the next power of two when a window would
    /// not fit.
    pub fft_size: usize,
    pub preemphasis: f64,
    pub low_freq: f64,
    /// `None` means Nyquist.
    pub high_freq: Option<f64>,
    pub cepstral_lifter: usize,
    /// Frames on each side used for the delta regression.
    pub delta_window: usize,
    pub energy_floor: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            sample_rate: 16_000,
            window_length: 0.025,
            frame_step: 0.010,
            num_cepstra: 13,
            num_filters: 26,
            fft_size: 512,
            preemphasis: 0.97,
            low_freq: 0.0,
            high_freq: None,
            cepstral_lifter: 22,
            delta_window: 2,
            energy_floor: 1e-10,
        }
    }
}

impl FeatureConfig {
    pub fn with_sample_rate(sample_rate: u32) -> Self {
        Self {
            sample_rate,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        let bad = |m: &str| Err(FeatureError::Config(m.to_string()));
        if self.sample_rate == 0 {
            return bad("sample_rate must be positive");
        }
        if !(self.frame_step > 0.0 && self.frame_step <= self.window_length) {
            return bad("need 0 < frame_step <= window_length");
        }
        if self.num_cepstra == 0 {
            return bad("num_cepstra must be at least 1");
        }
        if self.num_filters < self.num_cepstra {
            return bad("num_filters must be >= num_cepstra");
        }
        if self.delta_window == 0 {
            return bad("delta_window must be at least 1");
        }
        if !(self.energy_floor > 0.0) {
            return bad("energy_floor must be positive");
        }
        if self.window_samples() == 0 || self.step_samples() == 0 {
            return bad("window and step must each span at least one sample");
        }
        Ok(())
    }

    /// Window length in samples, rounded down.
    pub fn window_samples(&self) -> usize {
        seconds_to_samples(self.window_length, self.sample_rate)
    }

    /// Frame step in samples, rounded down.
    pub fn step_samples(&self) -> usize {
        seconds_to_samples(self.frame_step, self.sample_rate)
    }

    pub fn feature_dim(&self) -> usize {
        BLOCKS * self.num_cepstra
    }

    /// `1 + floor((n - window) / step)`, or 0 when `n < window`.
    pub fn frame_count(&self, num_samples: usize) -> usize {
        let (w, st) = (self.window_samples(), self.step_samples());
        if num_samples < w || st == 0 {
            0
        } else {
            1 + (num_samples - w) / st
        }
    }
}

fn seconds_to_samples(seconds: f64, rate: u32) -> usize {
    // the epsilon absorbs representation error such as 0.025 * 16000
    (seconds * rate as f64 + 1e-9).floor().max(0.0) as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    /// `T x (3 * num_cepstra)`: cepstra, deltas, delta-deltas.
    pub frames: Array2<f64>,
    pub config: FeatureConfig,
}

impl FeatureMatrix {
    pub fn num_frames(&self) -> usize {
        self.frames.nrows()
    }

    pub fn dim(&self) -> usize {
        self.frames.ncols()
    }

    /// Write the binary dump: magic, u32 T, u32 dim, row-major f32 (all LE).
    pub fn write_dump<W: Write>(&self, mut out: W) -> Result<(), FeatureError> {
        out.write_all(FEATURE_DUMP_MAGIC)?;
        out.write_all(&(self.num_frames() as u32).to_le_bytes())?;
        out.write_all(&(self.dim() as u32).to_le_bytes())?;
        for v in self.frames.iter() {
            out.write_all(&(*v as f32).to_le_bytes())?;
        }
        Ok(())
    }
}

/// Read a feature dump back as a `T x dim` matrix.
pub fn read_feature_dump<R: Read>(mut input: R) -> Result<Array2<f32>, FeatureError> {
    let mut magic = [0u8; 9];
    input
        .read_exact(&mut magic)
        .map_err(|_| FeatureError::Dump("truncated header".into()))?;
    if &magic != FEATURE_DUMP_MAGIC {
        return Err(FeatureError::Dump("bad magic".into()));
    }
    let mut word = [0u8; 4];
    input.read_exact(&mut word)?;
    let t = u32::from_le_bytes(word) as usize;
    input.read_exact(&mut word)?;
    let dim = u32::from_le_bytes(word) as usize;
    let mut data = Vec::with_capacity(t * dim);
    for _ in 0..t * dim {
        input
            .read_exact(&mut word)
            .map_err(|_| FeatureError::Dump("truncated body".into()))?;
        data.push(f32::from_le_bytes(word));
    }
    Array2::from_shape_vec((t, dim), data).map_err(|e| FeatureError::Dump(e.to_string()))
}

/// Mono PCM audio with its sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Audio {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl Audio {
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// Read a mono 16-bit PCM WAV file. Samples keep their integer scale.
pub fn read_wav(path: impl AsRef<Path>) -> Result<Audio, FeatureError> {
    let reader = hound::WavReader::open(path).map_err(wav_err)?;
    wav_from_reader(reader)
}

pub fn read_wav_from<R: Read>(input: R) -> Result<Audio, FeatureError> {
    let reader = hound::WavReader::new(input).map_err(wav_err)?;
    wav_from_reader(reader)
}

fn wav_from_reader<R: Read>(mut reader: hound::WavReader<R>) -> Result<Audio, FeatureError> {
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(FeatureError::Wav(format!(
            "{} channels; mono required",
            spec.channels
        )));
    }
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(FeatureError::Wav(format!(
            "{}-bit {:?} samples; 16-bit PCM required",
            spec.bits_per_sample, spec.sample_format
        )));
    }
    let samples = reader
        .samples::<i16>()
        .map(|s| s.map(f64::from))
        .collect::<Result<Vec<_>, _>>()
        .map_err(wav_err)?;
    Ok(Audio {
        samples,
        sample_rate: spec.sample_rate,
    })
}

fn wav_err(e: hound::Error) -> FeatureError {
    FeatureError::Wav(e.to_string())
}

fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular mel filters, `num_filters x (fft_size / 2 + 1)`.
fn mel_filterbank(config: &FeatureConfig, fft_size: usize) -> Array2<f64> {
    let nfilt = config.num_filters;
    let rate = config.sample_rate as f64;
    let high = config.high_freq.unwrap_or(rate / 2.0);
    let (low_mel, high_mel) = (hz_to_mel(config.low_freq), hz_to_mel(high));
    let bins: Vec<usize> = (0..nfilt + 2)
        .map(|i| {
            let mel = low_mel + (high_mel - low_mel) * i as f64 / (nfilt + 1) as f64;
            ((fft_size + 1) as f64 * mel_to_hz(mel) / rate).floor() as usize
        })
        .collect();
    let mut fb = Array2::zeros((nfilt, fft_size / 2 + 1));
    for j in 0..nfilt {
        let (lo, mid, hi) = (bins[j], bins[j + 1], bins[j + 2]);
        for i in lo..mid {
            fb[[j, i]] = (i - lo) as f64 / (mid - lo) as f64;
        }
        for i in mid..hi {
            fb[[j, i]] = (hi - i) as f64 / (hi - mid) as f64;
        }
    }
    fb
}

/// Orthonormal DCT-II, first `keep` coefficients.
fn dct2_ortho(input: &[f64], keep: usize) -> Vec<f64> {
    let n = input.len() as f64;
    (0..keep)
        .map(|k| {
            let sum: f64 = input
                .iter()
                .enumerate()
                .map(|(i, x)| {
                    x * (std::f64::consts::PI * k as f64 * (2 * i + 1) as f64 / (2.0 * n)).cos()
                })
                .sum();
            let scale = if k == 0 {
                (1.0 / n).sqrt()
            } else {
                (2.0 / n).sqrt()
            };
            sum * scale
        })
        .collect()
}

/// Regression deltas over `window` frames each side, edges replicated.
pub fn deltas(feat: ArrayView2<'_, f64>, window: usize) -> Array2<f64> {
    let (t, d) = feat.dim();
    let denom = 2.0 * (1..=window).map(|i| (i * i) as f64).sum::<f64>();
    let mut out = Array2::zeros((t, d));
    if t == 0 {
        return out;
    }
    let clamp = |i: isize| i.clamp(0, t as isize - 1) as usize;
    for row in 0..t {
        for n in 1..=window {
            let ahead = feat.row(clamp(row as isize + n as isize));
            let behind = feat.row(clamp(row as isize - n as isize));
            for c in 0..d {
                out[[row, c]] += n as f64 * (ahead[c] - behind[c]);
            }
        }
    }
    out /= denom;
    out
}

struct Spectrum {
    fft: Arc<dyn Fft<f64>>,
    size: usize,
}

impl Spectrum {
    fn new(size: usize) -> Self {
        Self {
            fft: FftPlanner::new().plan_fft_forward(size),
            size,
        }
    }

    /// Periodogram `|FFT|^2 / N` over the non-negative bins.
    fn power(&self, frame: &[f64]) -> Vec<f64> {
        let mut buf: Vec<Complex<f64>> = frame
            .iter()
            .map(|&x| Complex::new(x, 0.0))
            .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
            .take(self.size)
            .collect();
        self.fft.process(&mut buf);
        buf[..self.size / 2 + 1]
            .iter()
            .map(|c| c.norm_sqr() / self.size as f64)
            .collect()
    }
}

/// Compute the `T x 39` (for 13 cepstra) feature matrix of `samples`.
pub fn compute_features(
    samples: &[f64],
    config: &FeatureConfig,
) -> Result<FeatureMatrix, FeatureError> {
    config.validate()?;
    if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
        return Err(FeatureError::NonFinite(i));
    }
    let window = config.window_samples();
    if samples.len() < window {
        return Err(FeatureError::TooShort {
            samples: samples.len(),
            window,
        });
    }
    let step = config.step_samples();
    let t = config.frame_count(samples.len());
    let ncep = config.num_cepstra;

    let mut emphasized = Vec::with_capacity(samples.len());
    emphasized.push(samples[0]);
    emphasized.extend(samples.windows(2).map(|w| w[1] - config.preemphasis * w[0]));

    let fft_size = config.fft_size.max(window.next_power_of_two());
    let spectrum = Spectrum::new(fft_size);
    let fb = mel_filterbank(config, fft_size);
    let lifter: Vec<f64> = (0..ncep)
        .map(|n| {
            let l = config.cepstral_lifter as f64;
            if l > 0.0 {
                1.0 + (l / 2.0) * (std::f64::consts::PI * n as f64 / l).sin()
            } else {
                1.0
            }
        })
        .collect();

    let mut cepstra = Array2::zeros((t, ncep));
    for u in 0..t {
        let frame = &emphasized[u * step..u * step + window];
        let pspec = spectrum.power(frame);
        let energy: f64 = pspec.iter().sum();
        let log_mel: Vec<f64> = fb
            .rows()
            .into_iter()
            .map(|filter| {
                let e: f64 = filter.iter().zip(&pspec).map(|(w, p)| w * p).sum();
                e.max(config.energy_floor).ln()
            })
            .collect();
        let mut cep = dct2_ortho(&log_mel, ncep);
        for (c, l) in cep.iter_mut().zip(&lifter) {
            *c *= l;
        }
        cep[0] = energy.max(config.energy_floor).ln();
        for (c, v) in cep.into_iter().enumerate() {
            cepstra[[u, c]] = v;
        }
    }

    let d1 = deltas(cepstra.view(), config.delta_window);
    let d2 = deltas(d1.view(), config.delta_window);
    let mut frames = Array2::zeros((t, BLOCKS * ncep));
    frames.slice_mut(s![.., 0..ncep]).assign(&cepstra);
    frames.slice_mut(s![.., ncep..2 * ncep]).assign(&d1);
    frames.slice_mut(s![.., 2 * ncep..]).assign(&d2);
    Ok(FeatureMatrix {
        frames,
        config: config.clone(),
    })
}

/// A labeled time span from a corpus transcription.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentAnnotation {
    pub label: String,
    pub start: f64,
    pub end: f64,
}

impl SegmentAnnotation {
    pub fn new(label: impl Into<String>, start: f64, end: f64) -> Self {
        Self {
            label: label.into(),
            start,
            end,
        }
    }
}

// Overlaps closer than this are treated as ties.
const OVERLAP_TIE_EPS: f64 = 1e-9;

/// Label each of `num_frames` frames with the segment covering most of its
/// window `[u * step, u * step + window]`; ties go to the earlier segment.
pub fn label_frames(
    segments: &[SegmentAnnotation],
    num_frames: usize,
    config: &FeatureConfig,
) -> Result<Vec<String>, FeatureError> {
    for (i, seg) in segments.iter().enumerate() {
        if !(seg.start < seg.end) {
            return Err(FeatureError::Segment {
                index: i,
                message: format!("start {} is not before end {}", seg.start, seg.end),
            });
        }
        if i > 0 && seg.start < segments[i - 1].end - OVERLAP_TIE_EPS {
            return Err(FeatureError::Segment {
                index: i,
                message: "segments overlap or are unsorted".into(),
            });
        }
    }
    let mut labels = Vec::with_capacity(num_frames);
    let mut first = 0;
    for u in 0..num_frames {
        let start = u as f64 * config.frame_step;
        let end = start + config.window_length;
        while first < segments.len() && segments[first].end <= start {
            first += 1;
        }
        let mut best: Option<(usize, f64)> = None;
        for (j, seg) in segments.iter().enumerate().skip(first) {
            if seg.start >= end {
                break;
            }
            let overlap = seg.end.min(end) - seg.start.max(start);
            if overlap <= 0.0 {
                continue;
            }
            match best {
                Some((_, b)) if overlap <= b + OVERLAP_TIE_EPS => {}
                _ => best = Some((j, overlap)),
            }
        }
        match best {
            Some((j, _)) => labels.push(segments[j].label.clone()),
            None => {
                return Err(FeatureError::Unlabeled {
                    frame: u,
                    start,
                    end,
                })
            }
        }
    }
    Ok(labels)
}
