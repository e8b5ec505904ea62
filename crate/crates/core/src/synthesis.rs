//! Rayleigh-damped modal impulse synthesis and 16-bit PCM WAV I/O.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::eigen::ModalModel;
use crate::error::{Error, Result};
use crate::material::MaterialSpec;

pub const DEFAULT_SAMPLE_RATE: u32 = 32_000;
pub const DEFAULT_DURATION: f64 = 1.0;
pub const DEFAULT_PEAK: f64 = 0.9;

/// Impulse response parameters of one unit-modal-mass oscillator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModalOscillator {
    pub amplitude: f64,
    /// 1/s
    pub decay: f64,
    /// rad/s
    pub damped_angular_freq: f64,
    pub underdamped: bool,
}

impl ModalOscillator {
    pub fn damped_frequency_hz(&self) -> f64 {
        self.damped_angular_freq / (2.0 * std::f64::consts::PI)
    }

    pub fn sample(&self, t: f64) -> f64 {
        if !self.underdamped {
            return 0.0;
        }
        self.amplitude * (-self.decay * t).exp() * (self.damped_angular_freq * t).sin()
    }
}

/// `σ = (α + βλ)/2`; underdamped iff `σ² < λ`, then `ω_d = √(λ - σ²)` and
/// `A = 1/ω_d`.
pub fn oscillator_params(lambda: f64, alpha: f64, beta: f64) -> Result<ModalOscillator> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("eigenvalue must be positive, got {lambda}")));
    }
    if !(alpha >= 0.0 && beta >= 0.0) {
        return Err(Error::InvalidArgument("damping coefficients must be non-negative".into()));
    }
    let decay = 0.5 * (alpha + beta * lambda);
    if decay * decay < lambda {
        let wd = (lambda - decay * decay).sqrt();
        Ok(ModalOscillator { amplitude: 1.0 / wd, decay, damped_angular_freq: wd, underdamped: true })
    } else {
        Ok(ModalOscillator { amplitude: 0.0, decay, damped_angular_freq: 0.0, underdamped: false })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthesisParams {
    pub sample_rate: u32,
    pub duration: f64,
    /// Peak magnitude after normalization.
    pub peak: f64,
}

impl Default for SynthesisParams {
    fn default() -> Self {
        SynthesisParams { sample_rate: DEFAULT_SAMPLE_RATE, duration: DEFAULT_DURATION, peak: DEFAULT_PEAK }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AudioClip {
    pub sample_rate: u32,
    pub samples: Vec<f64>,
    /// Factor applied to the raw superposition to reach the target peak;
    /// 1.0 for a silent clip.
    pub normalization_gain: f64,
    /// No mode survived the damping and Nyquist filters.
    pub silent: bool,
}

impl AudioClip {
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// What happened to each mode during synthesis.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SynthesisSummary {
    pub audible_modes: usize,
    pub overdamped_modes: usize,
    pub above_nyquist_modes: usize,
    pub normalization_gain: f64,
    pub sample_rate: u32,
    pub duration: f64,
    pub rayleigh_alpha: f64,
    pub rayleigh_beta: f64,
}

/// Sample count `round(rate · duration)`.
pub fn sample_count(rate: u32, duration: f64) -> usize {
    (rate as f64 * duration).round() as usize
}

/// Superposition of the audible oscillators before normalization.
pub fn raw_signal(oscillators: &[ModalOscillator], rate: u32, duration: f64) -> Vec<f64> {
    let n = sample_count(rate, duration);
    let mut out = vec![0.0; n];
    for osc in oscillators.iter().filter(|o| o.underdamped) {
        for (i, s) in out.iter_mut().enumerate() {
            *s += osc.sample(i as f64 / rate as f64);
        }
    }
    out
}

/// Oscillators for all modes plus the subset that is audible at `rate`.
pub fn mode_oscillators(
    eigenvalues: &[f64],
    alpha: f64,
    beta: f64,
    rate: u32,
) -> Result<(Vec<ModalOscillator>, SynthesisSummary)> {
    let nyquist = rate as f64 / 2.0;
    let mut summary = SynthesisSummary::default();
    let mut audible = Vec::new();
    for &l in eigenvalues {
        let osc = oscillator_params(l, alpha, beta)?;
        if !osc.underdamped {
            summary.overdamped_modes += 1;
        } else if osc.damped_frequency_hz() >= nyquist {
            summary.above_nyquist_modes += 1;
        } else {
            audible.push(osc);
        }
    }
    summary.audible_modes = audible.len();
    Ok((audible, summary))
}

/// Synthesizes the unit-impulse response of `eigenvalues` with the given
/// Rayleigh coefficients and peak-normalizes it.
pub fn synthesize_eigenvalues(
    eigenvalues: &[f64],
    alpha: f64,
    beta: f64,
    params: &SynthesisParams,
) -> Result<(AudioClip, SynthesisSummary)> {
    if !(params.duration > 0.0) || params.sample_rate == 0 {
        return Err(Error::InvalidArgument("duration and sample rate must be positive".into()));
    }
    if !(params.peak > 0.0 && params.peak <= 1.0) {
        return Err(Error::InvalidArgument(format!("peak must lie in (0, 1], got {}", params.peak)));
    }
    let (audible, mut summary) = mode_oscillators(eigenvalues, alpha, beta, params.sample_rate)?;
    let mut samples = raw_signal(&audible, params.sample_rate, params.duration);
    let max = samples.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    let silent = audible.is_empty() || max == 0.0;
    let gain = if silent { 1.0 } else { params.peak / max };
    if !silent {
        samples.iter_mut().for_each(|s| *s *= gain);
    }
    summary.normalization_gain = gain;
    summary.sample_rate = params.sample_rate;
    summary.duration = params.duration;
    summary.rayleigh_alpha = alpha;
    summary.rayleigh_beta = beta;
    Ok((AudioClip { sample_rate: params.sample_rate, samples, normalization_gain: gain, silent }, summary))
}

pub fn synthesize(
    modal: &ModalModel,
    material: &MaterialSpec,
    params: &SynthesisParams,
) -> Result<(AudioClip, SynthesisSummary)> {
    if !modal.converged {
        return Err(Error::InvalidArgument("modal model did not converge".into()));
    }
    synthesize_eigenvalues(&modal.eigenvalues, material.rayleigh_alpha, material.rayleigh_beta, params)
}

/// Round half away from zero of `sample · 32767`, clamped to the i16 range.
pub fn quantize(sample: f64) -> i16 {
    let q = (sample * 32767.0).round();
    q.clamp(-32768.0, 32767.0) as i16
}

pub fn wav_bytes(clip: &AudioClip) -> Vec<u8> {
    let data_len = (clip.samples.len() * 2) as u32;
    let mut b = Vec::with_capacity(44 + data_len as usize);
    b.extend_from_slice(b"RIFF");
    b.extend_from_slice(&(36 + data_len).to_le_bytes());
    b.extend_from_slice(b"WAVE");
    b.extend_from_slice(b"fmt ");
    b.extend_from_slice(&16u32.to_le_bytes());
    b.extend_from_slice(&1u16.to_le_bytes()); // PCM
    b.extend_from_slice(&1u16.to_le_bytes()); // mono
    b.extend_from_slice(&clip.sample_rate.to_le_bytes());
    b.extend_from_slice(&(clip.sample_rate * 2).to_le_bytes());
    b.extend_from_slice(&2u16.to_le_bytes());
    b.extend_from_slice(&16u16.to_le_bytes());
    b.extend_from_slice(b"data");
    b.extend_from_slice(&data_len.to_le_bytes());
    for &s in &clip.samples {
        b.extend_from_slice(&quantize(s).to_le_bytes());
    }
    b
}

pub fn write_wav(clip: &AudioClip, path: &Path) -> Result<()> {
    std::fs::write(path, wav_bytes(clip)).map_err(|e| Error::io(path, e))
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

/// Parses a mono 16-bit PCM RIFF/WAVE file; samples are dequantized by
/// `1/32767`. Unknown chunks are skipped.
pub fn parse_wav(bytes: &[u8]) -> Result<AudioClip> {
    let bad = |msg: &str| Error::parse("wav", 0, msg);
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(bad("missing RIFF/WAVE header"));
    }
    let mut pos = 12;
    let mut fmt: Option<(u16, u16, u32, u16)> = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let len = u32_at(bytes, pos + 4) as usize;
        let body = pos + 8;
        if body + len > bytes.len() {
            return Err(bad("chunk extends past end of file"));
        }
        match id {
            b"fmt " => {
                if len < 16 {
                    return Err(bad("fmt chunk too short"));
                }
                fmt = Some((
                    u16_at(bytes, body),
                    u16_at(bytes, body + 2),
                    u32_at(bytes, body + 4),
                    u16_at(bytes, body + 14),
                ));
            }
            b"data" => {
                let (format, channels, rate, bits) = fmt.ok_or_else(|| bad("data chunk before fmt chunk"))?;
                if format != 1 {
                    return Err(Error::UnsupportedFormat(format!("WAV format tag {format}, only PCM is supported")));
                }
                if channels != 1 {
                    return Err(Error::UnsupportedFormat(format!("{channels} channels, only mono is supported")));
                }
                if bits != 16 {
                    return Err(Error::UnsupportedFormat(format!("{bits}-bit samples, only 16-bit is supported")));
                }
                if len % 2 != 0 {
                    return Err(bad("odd data chunk length"));
                }
                let samples = bytes[body..body + len]
                    .chunks_exact(2)
                    .map(|c| i16::from_le_bytes([c[0], c[1]]) as f64 / 32767.0)
                    .collect();
                return Ok(AudioClip { sample_rate: rate, samples, normalization_gain: 1.0, silent: false });
            }
            _ => {}
        }
        pos = body + len + (len & 1);
    }
    Err(bad("no data chunk"))
}

pub fn read_wav(path: &Path) -> Result<AudioClip> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_wav(&bytes)
}
