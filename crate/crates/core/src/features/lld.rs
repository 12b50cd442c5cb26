//! Frame-level low-level descriptors (LLDs).
//!
//! Per frame: log energy, zero-crossing rate, voicing probability, F0 and
//! MFCC 1..12. Pitch comes from the autocorrelation of the mean-removed frame
//! divided by the autocorrelation of the analysis window, searched between
//! 50 and 500 Hz. MFCCs use a 26-band triangular mel filterbank over
//! 0..8 kHz (capped at Nyquist), natural log and an orthonormal DCT-II.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::frame::hamming;

pub const LLD_COUNT: usize = 16;
pub const MFCC_COUNT: usize = 12;
pub const MEL_BANDS: usize = 26;

pub const LLD_NAMES: [&str; LLD_COUNT] = [
    "intensity", "zcr", "voicing", "f0", "mfcc1", "mfcc2", "mfcc3", "mfcc4", "mfcc5", "mfcc6",
    "mfcc7", "mfcc8", "mfcc9", "mfcc10", "mfcc11", "mfcc12",
];

const ENERGY_FLOOR: f64 = 1e-10;
const F0_MIN_HZ: f64 = 50.0;
const F0_MAX_HZ: f64 = 500.0;
const MEL_MAX_HZ: f64 = 8000.0;
/// Frames whose voicing probability falls below this get F0 = 0.
pub const VOICING_THRESHOLD: f64 = 0.45;
/// Candidate peaks within this fraction of the best one win if they sit at a shorter lag.
const OCTAVE_TOLERANCE: f64 = 0.9;

/// The 16 descriptors of one frame, in the fixed order of [`LLD_NAMES`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LldFrame(pub [f64; LLD_COUNT]);

impl LldFrame {
    pub fn intensity(&self) -> f64 {
        self.0[0]
    }

    pub fn zcr(&self) -> f64 {
        self.0[1]
    }

    pub fn voicing(&self) -> f64 {
        self.0[2]
    }

    pub fn f0(&self) -> f64 {
        self.0[3]
    }

    pub fn mfcc(&self) -> &[f64] {
        &self.0[4..]
    }
}

/// Precomputed tables for one (frame length, sample rate) combination.
pub struct LldExtractor {
    sample_rate: u32,
    frame_len: usize,
    window: Vec<f64>,
    window_acf: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    fft_len: usize,
    filterbank: Vec<Vec<(usize, f64)>>,
    dct: Vec<Vec<f64>>,
}

impl std::fmt::Debug for LldExtractor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LldExtractor")
            .field("sample_rate", &self.sample_rate)
            .field("frame_len", &self.frame_len)
            .field("fft_len", &self.fft_len)
            .finish()
    }
}

fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

fn autocorrelation(x: &[f64], max_lag: usize) -> Vec<f64> {
    (0..=max_lag.min(x.len().saturating_sub(1)))
        .map(|lag| x.iter().zip(&x[lag..]).map(|(a, b)| a * b).sum())
        .collect()
}

fn mel_filterbank(sample_rate: u32, fft_len: usize) -> Vec<Vec<(usize, f64)>> {
    let nyquist = sample_rate as f64 / 2.0;
    let high = hz_to_mel(MEL_MAX_HZ.min(nyquist));
    let edges: Vec<f64> = (0..MEL_BANDS + 2)
        .map(|i| mel_to_hz(high * i as f64 / (MEL_BANDS + 1) as f64))
        .collect();
    let bin_hz = sample_rate as f64 / fft_len as f64;
    let bins = fft_len / 2 + 1;
    (0..MEL_BANDS)
        .map(|m| {
            let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
            (0..bins)
                .filter_map(|k| {
                    let f = k as f64 * bin_hz;
                    let w = if f > lo && f <= mid {
                        (f - lo) / (mid - lo)
                    } else if f > mid && f < hi {
                        (hi - f) / (hi - mid)
                    } else {
                        0.0
                    };
                    (w > 0.0).then_some((k, w))
                })
                .collect()
        })
        .collect()
}

fn dct_matrix() -> Vec<Vec<f64>> {
    let m = MEL_BANDS as f64;
    let scale = (2.0 / m).sqrt();
    (1..=MFCC_COUNT)
        .map(|k| {
            (0..MEL_BANDS)
                .map(|j| scale * (std::f64::consts::PI * k as f64 * (j as f64 + 0.5) / m).cos())
                .collect()
        })
        .collect()
}

impl LldExtractor {
    pub fn new(sample_rate: u32, frame_len: usize) -> Self {
        let window = hamming(frame_len);
        let window_acf = autocorrelation(&window, frame_len - 1);
        let fft_len = frame_len.next_power_of_two();
        let fft = FftPlanner::new().plan_fft_forward(fft_len);
        Self {
            sample_rate,
            frame_len,
            window,
            window_acf,
            fft,
            fft_len,
            filterbank: mel_filterbank(sample_rate, fft_len),
            dct: dct_matrix(),
        }
    }

    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    /// Descriptors of one Hamming-windowed frame.
    pub fn extract(&self, frame: &[f64]) -> LldFrame {
        debug_assert_eq!(frame.len(), self.frame_len);
        let mut out = [0.0; LLD_COUNT];
        let energy = frame.iter().map(|x| x * x).sum::<f64>() / frame.len() as f64;
        out[0] = energy.max(ENERGY_FLOOR).ln();
        out[1] = zero_crossing_rate(frame);
        if energy > ENERGY_FLOOR {
            let (voicing, f0) = self.pitch(frame);
            out[2] = voicing;
            out[3] = f0;
        }
        out[4..].copy_from_slice(&self.mfcc(frame));
        LldFrame(out)
    }

    /// Returns (voicing probability, F0 in Hz; 0 when unvoiced).
    fn pitch(&self, frame: &[f64]) -> (f64, f64) {
        let sr = self.sample_rate as f64;
        let wsum: f64 = self.window.iter().sum();
        let dc = frame.iter().sum::<f64>() / wsum;
        let centered: Vec<f64> = frame
            .iter()
            .zip(&self.window)
            .map(|(x, w)| x - dc * w)
            .collect();

        let min_lag = (sr / F0_MAX_HZ).floor().max(1.0) as usize;
        let max_lag = ((sr / F0_MIN_HZ).ceil() as usize).min(self.frame_len * 2 / 3);
        if max_lag < min_lag + 2 {
            return (0.0, 0.0);
        }
        let acf = autocorrelation(&centered, max_lag + 1);
        if acf[0] <= 0.0 {
            return (0.0, 0.0);
        }
        let nacf = |lag: usize| -> f64 {
            let r = (acf[lag] / acf[0]) / (self.window_acf[lag] / self.window_acf[0]);
            r.clamp(-1.0, 1.0)
        };
        let curve: Vec<f64> = (0..=max_lag + 1).map(|l| if l == 0 { 1.0 } else { nacf(l) }).collect();

        let peaks: Vec<usize> = (min_lag..=max_lag)
            .filter(|&l| curve[l] > curve[l - 1] && curve[l] >= curve[l + 1])
            .collect();
        let best = peaks.iter().map(|&l| curve[l]).fold(f64::NEG_INFINITY, f64::max);
        if !(best > 0.0) {
            return (0.0, 0.0);
        }
        let lag = peaks
            .iter()
            .copied()
            .find(|&l| curve[l] >= OCTAVE_TOLERANCE * best)
            .expect("best peak satisfies its own tolerance");
        let voicing = curve[lag].clamp(0.0, 1.0);
        if voicing < VOICING_THRESHOLD {
            return (voicing, 0.0);
        }
        let (a, b, c) = (curve[lag - 1], curve[lag], curve[lag + 1]);
        let denom = a - 2.0 * b + c;
        let shift = if denom.abs() > 1e-12 {
            (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
        } else {
            0.0
        };
        (voicing, sr / (lag as f64 + shift))
    }

    fn mfcc(&self, frame: &[f64]) -> [f64; MFCC_COUNT] {
        let mut buf: Vec<Complex<f64>> = frame
            .iter()
            .map(|&x| Complex::new(x, 0.0))
            .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
            .take(self.fft_len)
            .collect();
        self.fft.process(&mut buf);
        let power: Vec<f64> = buf[..self.fft_len / 2 + 1]
            .iter()
            .map(|c| c.norm_sqr() / self.fft_len as f64)
            .collect();
        let log_mel: Vec<f64> = self
            .filterbank
            .iter()
            .map(|band| {
                let e: f64 = band.iter().map(|&(k, w)| w * power[k]).sum();
                e.max(ENERGY_FLOOR).ln()
            })
            .collect();
        let mut out = [0.0; MFCC_COUNT];
        for (o, row) in out.iter_mut().zip(&self.dct) {
            *o = row.iter().zip(&log_mel).map(|(c, l)| c * l).sum();
        }
        out
    }
}

/// Fraction of consecutive sample pairs whose sign differs (zero counts as positive).
pub fn zero_crossing_rate(frame: &[f64]) -> f64 {
    if frame.len() < 2 {
        return 0.0;
    }
    let crossings = frame
        .windows(2)
        .filter(|w| (w[0] >= 0.0) != (w[1] >= 0.0))
        .count();
    crossings as f64 / (frame.len() - 1) as f64
}

/// One-off extraction for a single windowed frame.
pub fn extract_llds(frame: &[f64], sample_rate: u32) -> LldFrame {
    LldExtractor::new(sample_rate, frame.len()).extract(frame)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::frame::{frame_signal, AudioClip, FrameConfig};

    fn sine(freq: f64, sr: u32, secs: f64, amp: f64) -> AudioClip {
        let n = (sr as f64 * secs) as usize;
        let samples = (0..n)
            .map(|i| amp * (2.0 * std::f64::consts::PI * freq * i as f64 / sr as f64).sin())
            .collect();
        AudioClip::new(samples, sr).unwrap()
    }

    #[test]
    fn dc_frame_has_no_crossings() {
        let frame = vec![0.3; 400];
        assert_eq!(zero_crossing_rate(&frame), 0.0);
        let lld = extract_llds(&frame, 16_000);
        assert_eq!(lld.zcr(), 0.0);
        assert_eq!(lld.f0(), 0.0);
    }

    #[test]
    fn alternating_frame_crosses_everywhere() {
        let frame: Vec<f64> = (0..400).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert_eq!(zero_crossing_rate(&frame), 1.0);
    }

    #[test]
    fn silence_hits_floors() {
        let lld = extract_llds(&vec![0.0; 400], 16_000);
        assert_eq!(lld.intensity(), ENERGY_FLOOR.ln());
        assert_eq!(lld.voicing(), 0.0);
        assert_eq!(lld.f0(), 0.0);
        assert!(lld.0.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn pure_tones_recover_f0() {
        for freq in [100.0, 200.0, 400.0] {
            let clip = sine(freq, 16_000, 0.3, 1.0);
            let frames = frame_signal(&clip, &FrameConfig::default()).unwrap();
            let ex = LldExtractor::new(16_000, frames[0].len());
            for f in &frames {
                let lld = ex.extract(f);
                assert!(
                    (lld.f0() - freq).abs() <= 0.05 * freq,
                    "freq {freq}: got {}",
                    lld.f0()
                );
            }
        }
    }

    #[test]
    fn two_hundred_hz_is_strongly_voiced() {
        let clip = sine(200.0, 16_000, 0.1, 1.0);
        let frames = frame_signal(&clip, &FrameConfig::default()).unwrap();
        let lld = extract_llds(&frames[2], 16_000);
        assert!((190.0..=210.0).contains(&lld.f0()));
        assert!(lld.voicing() > 0.9, "voicing {}", lld.voicing());
    }

    #[test]
    fn scaling_shifts_intensity_only() {
        let clip = sine(150.0, 16_000, 0.05, 0.2);
        let louder = AudioClip::new(clip.samples().iter().map(|s| s * 3.0).collect(), 16_000)
            .unwrap();
        let fa = frame_signal(&clip, &FrameConfig::default()).unwrap();
        let fb = frame_signal(&louder, &FrameConfig::default()).unwrap();
        let a = extract_llds(&fa[1], 16_000);
        let b = extract_llds(&fb[1], 16_000);
        assert_eq!(a.zcr(), b.zcr());
        // energy scales with the square of the amplitude
        assert!((b.intensity() - a.intensity() - 9f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn filterbank_has_no_empty_bands() {
        for sr in [8_000, 16_000, 44_100] {
            let fft_len = FrameConfig::default().frame_len(sr).next_power_of_two();
            assert!(mel_filterbank(sr, fft_len).iter().all(|b| !b.is_empty()), "sr {sr}");
        }
    }
}
