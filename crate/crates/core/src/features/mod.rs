//! Per-utterance acoustic descriptor and per-dataset standardization.

mod frame;
mod functionals;
mod lld;
mod standardize;
mod wav;

pub use frame::{frame_signal, hamming, AudioClip, FrameConfig};
pub use functionals::{functionals, mean_std, FEATURE_DIM};
pub use lld::{
    extract_llds, zero_crossing_rate, LldExtractor, LldFrame, LLD_COUNT, LLD_NAMES, MEL_BANDS,
    MFCC_COUNT, VOICING_THRESHOLD,
};
pub use standardize::{apply_standardizer, fit_standardizer, StandardizationStats};
pub use wav::{read_wav, write_wav};

use crate::error::Result;

/// Full pipeline: frame, extract LLDs, take functionals. Returns 64 values.
pub fn extract_features(clip: &AudioClip, config: &FrameConfig) -> Result<Vec<f64>> {
    let frames = frame_signal(clip, config)?;
    let extractor = LldExtractor::new(clip.sample_rate(), config.frame_len(clip.sample_rate()));
    let llds: Vec<LldFrame> = frames.iter().map(|f| extractor.extract(f)).collect();
    functionals(&llds)
}

/// Human-readable names of the 64 descriptor dimensions.
pub fn feature_names() -> Vec<String> {
    let mut names = Vec::with_capacity(FEATURE_DIM);
    for (prefix, stat) in [("", "mean"), ("", "std"), ("d_", "mean"), ("d_", "std")] {
        for lld in LLD_NAMES {
            names.push(format!("{prefix}{lld}_{stat}"));
        }
    }
    names
}
