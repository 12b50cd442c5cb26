use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Mono audio with samples nominally in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::Input("sample rate must be positive".into()));
        }
        if samples.is_empty() {
            return Err(Error::Input("audio clip is empty".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::Input("audio clip contains non-finite samples".into()));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameConfig {
    pub frame_ms: f64,
    pub step_ms: f64,
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self {
            frame_ms: 25.0,
            step_ms: 10.0,
        }
    }
}

impl FrameConfig {
    pub fn frame_len(&self, sample_rate: u32) -> usize {
        ms_to_samples(self.frame_ms, sample_rate)
    }

    pub fn step_len(&self, sample_rate: u32) -> usize {
        ms_to_samples(self.step_ms, sample_rate)
    }
}

fn ms_to_samples(ms: f64, sample_rate: u32) -> usize {
    (ms * sample_rate as f64 / 1000.0).round() as usize
}

pub fn hamming(len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    let denom = (len - 1) as f64;
    (0..len)
        .map(|n| 0.54 - 0.46 * (2.0 * PI * n as f64 / denom).cos())
        .collect()
}

/// Splits a clip into overlapping Hamming-windowed frames.
///
/// Produces `floor((N - frame_len) / step_len) + 1` frames; trailing samples
/// that do not fill a frame are dropped.
pub fn frame_signal(clip: &AudioClip, config: &FrameConfig) -> Result<Vec<Vec<f64>>> {
    let sr = clip.sample_rate();
    let frame_len = config.frame_len(sr);
    let step = config.step_len(sr);
    if frame_len == 0 || step == 0 {
        return Err(Error::Input(format!(
            "frame ({} ms) and step ({} ms) must span at least one sample at {sr} Hz",
            config.frame_ms, config.step_ms
        )));
    }
    let n = clip.samples().len();
    if n < frame_len {
        return Err(Error::Input(format!(
            "clip has {n} samples, shorter than one {frame_len}-sample frame"
        )));
    }
    let window = hamming(frame_len);
    let count = (n - frame_len) / step + 1;
    Ok((0..count)
        .map(|f| {
            let start = f * step;
            clip.samples()[start..start + frame_len]
                .iter()
                .zip(&window)
                .map(|(s, w)| s * w)
                .collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn silence(ms: usize, sr: u32) -> AudioClip {
        AudioClip::new(vec![0.0; ms * sr as usize / 1000], sr).unwrap()
    }

    #[test]
    fn one_second_at_16k_gives_98_frames() {
        let frames = frame_signal(&silence(1000, 16_000), &FrameConfig::default()).unwrap();
        assert_eq!(frames.len(), 98);
        assert!(frames.iter().all(|f| f.len() == 400));
    }

    #[test]
    fn exactly_one_frame() {
        let frames = frame_signal(&silence(25, 16_000), &FrameConfig::default()).unwrap();
        assert_eq!(frames.len(), 1);
    }

    #[test]
    fn below_one_frame_is_rejected() {
        let err = frame_signal(&silence(24, 16_000), &FrameConfig::default()).unwrap_err();
        assert_eq!(err.category(), "input");
    }

    #[test]
    fn window_is_applied() {
        let clip = AudioClip::new(vec![1.0; 400], 16_000).unwrap();
        let frames = frame_signal(&clip, &FrameConfig::default()).unwrap();
        assert!((frames[0][0] - 0.08).abs() < 1e-12);
        assert!(frames[0][200] > 0.99);
    }

    #[test]
    fn invalid_clips() {
        assert!(AudioClip::new(vec![], 16_000).is_err());
        assert!(AudioClip::new(vec![0.0], 0).is_err());
        assert!(AudioClip::new(vec![f64::NAN], 8_000).is_err());
    }
}
