mod common;

use std::f64::consts::PI;

use common::oracles::{envelope, peak_bin, slope, spectrum};
use modalforge::synthesis::{parse_wav, quantize, synthesize_eigenvalues, wav_bytes, AudioClip, SynthesisParams};
use proptest::prelude::*;

fn lambda_of(hz: f64) -> f64 {
    (2.0 * PI * hz).powi(2)
}

#[test]
fn undamped_tone_peaks_at_its_frequency() {
    let params = SynthesisParams::default();
    for hz in [440.0, 1234.5, 9000.0] {
        let (clip, summary) = synthesize_eigenvalues(&[lambda_of(hz)], 0.0, 0.0, &params).unwrap();
        assert_eq!(summary.audible_modes, 1);
        assert_eq!(clip.samples.len(), 32_000);
        let bin_hz = clip.sample_rate as f64 / clip.samples.len() as f64;
        let peak = peak_bin(&clip.samples) as f64 * bin_hz;
        assert!((peak - hz).abs() <= bin_hz, "{hz}: {peak}");
    }
}

#[test]
fn damped_envelope_decays_at_sigma() {
    let (alpha, beta) = (5.0, 1e-7);
    let lambda = lambda_of(440.0);
    let sigma = 0.5 * (alpha + beta * lambda);
    let (clip, _) = synthesize_eigenvalues(&[lambda], alpha, beta, &SynthesisParams::default()).unwrap();
    let env = envelope(&clip.samples);
    let n = env.len();
    let rate = clip.sample_rate as f64;
    let (lo, hi) = (n / 10, 9 * n / 10);
    let ts: Vec<f64> = (lo..hi).map(|i| i as f64 / rate).collect();
    let logs: Vec<f64> = env[lo..hi].iter().map(|e| e.ln()).collect();
    let fitted = slope(&ts, &logs);
    assert!((fitted + sigma).abs() <= 0.01 * sigma, "slope {fitted}, σ {sigma}");
}

#[test]
fn every_audible_mode_shows_up_in_the_spectrum() {
    let freqs = [300.0, 1100.0, 2500.0, 7000.0];
    let eigs: Vec<f64> = freqs.iter().map(|&f| lambda_of(f)).collect();
    let (clip, summary) = synthesize_eigenvalues(&eigs, 1.0, 1e-8, &SynthesisParams::default()).unwrap();
    assert_eq!(summary.audible_modes, 4);
    let s = spectrum(&clip.samples);
    let mags: Vec<f64> = s[..s.len() / 2].iter().map(|c| c.norm()).collect();
    let median = {
        let mut m = mags.clone();
        m.sort_by(f64::total_cmp);
        m[m.len() / 2]
    };
    for f in freqs {
        let b = f.round() as usize;
        let local = mags[b - 2..=b + 2].iter().cloned().fold(0.0, f64::max);
        assert!(local > 100.0 * median, "{f} Hz");
    }
}

#[test]
fn modes_above_nyquist_or_overdamped_are_dropped() {
    let params = SynthesisParams::default();
    let (_, s) = synthesize_eigenvalues(&[lambda_of(20_000.0), lambda_of(500.0)], 0.0, 0.0, &params).unwrap();
    assert_eq!((s.audible_modes, s.above_nyquist_modes), (1, 1));
    let (clip, s) = synthesize_eigenvalues(&[100.0], 1e3, 0.0, &params).unwrap();
    assert_eq!(s.overdamped_modes, 1);
    assert!(clip.silent);
    assert!(clip.samples.iter().all(|&x| x == 0.0));
    let (clip, _) = synthesize_eigenvalues(&[], 0.0, 0.0, &params).unwrap();
    assert!(clip.silent);
}

#[test]
fn wav_layout_and_round_trip() {
    let eigs = [lambda_of(440.0), lambda_of(880.0)];
    let (clip, _) = synthesize_eigenvalues(&eigs, 5.0, 1e-7, &SynthesisParams::default()).unwrap();
    let bytes = wav_bytes(&clip);
    assert_eq!(bytes.len(), 44 + 64_000);
    assert_eq!(&bytes[0..4], b"RIFF");
    assert_eq!(&bytes[8..16], b"WAVEfmt ");
    assert_eq!(u16::from_le_bytes([bytes[22], bytes[23]]), 1);
    assert_eq!(u32::from_le_bytes(bytes[24..28].try_into().unwrap()), 32_000);
    assert_eq!(u16::from_le_bytes([bytes[34], bytes[35]]), 16);
    assert_eq!(u32::from_le_bytes(bytes[40..44].try_into().unwrap()), 64_000);
    let back = parse_wav(&bytes).unwrap();
    for (a, b) in clip.samples.iter().zip(&back.samples) {
        assert!((a - b).abs() <= 1.0 / 32767.0);
    }
    let peak = clip.samples.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    assert!((peak - 0.9).abs() < 1e-12);
}

#[test]
fn resynthesis_is_byte_identical() {
    let eigs: Vec<f64> = (1..40).map(|i| lambda_of(97.0 * i as f64)).collect();
    let a = synthesize_eigenvalues(&eigs, 5.0, 1e-7, &SynthesisParams::default()).unwrap();
    let b = synthesize_eigenvalues(&eigs, 5.0, 1e-7, &SynthesisParams::default()).unwrap();
    assert_eq!(wav_bytes(&a.0), wav_bytes(&b.0));
    assert_eq!(a.1, b.1);
}

#[test]
fn silent_clip_is_all_zero_data() {
    let clip = AudioClip { sample_rate: 32_000, samples: vec![0.0; 320], normalization_gain: 1.0, silent: true };
    assert!(wav_bytes(&clip)[44..].iter().all(|&b| b == 0));
}

proptest! {
    #[test]
    fn quantized_round_trip_within_one_lsb(samples in prop::collection::vec(-1.0f64..=1.0, 1..500), rate in 8000u32..96000) {
        let clip = AudioClip { sample_rate: rate, samples, normalization_gain: 1.0, silent: false };
        let back = parse_wav(&wav_bytes(&clip)).unwrap();
        prop_assert_eq!(back.sample_rate, rate);
        prop_assert_eq!(back.samples.len(), clip.samples.len());
        for (a, b) in clip.samples.iter().zip(&back.samples) {
            prop_assert!((a - b).abs() <= 1.0 / 32767.0);
        }
    }

    #[test]
    fn quantize_is_monotone_and_clamped(a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(quantize(lo) <= quantize(hi));
        if a.abs() <= 1.0 {
            prop_assert_eq!(quantize(a) as f64, (a * 32767.0).round());
        } else if a > 1.0 {
            prop_assert_eq!(quantize(a), i16::MAX);
        }
    }

    #[test]
    fn normalized_peak_is_exact(freqs in prop::collection::vec(50.0f64..8000.0, 1..6), alpha in 0.0f64..20.0) {
        let eigs: Vec<f64> = freqs.iter().map(|&f| lambda_of(f)).collect();
        let params = SynthesisParams { duration: 0.05, ..SynthesisParams::default() };
        let (clip, _) = synthesize_eigenvalues(&eigs, alpha, 0.0, &params).unwrap();
        let peak = clip.samples.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        prop_assert!((peak - 0.9).abs() < 1e-12);
    }
}
