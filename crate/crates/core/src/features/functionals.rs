use super::lld::{LldFrame, LLD_COUNT};
use crate::error::{Error, Result};

pub const FEATURE_DIM: usize = 4 * LLD_COUNT;

/// Population mean and standard deviation.
pub fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Collapses an LLD series into the 64-dim utterance descriptor:
/// `[mean(LLD), std(LLD), mean(dLLD), std(dLLD)]`, 16 values per block,
/// with `dLLD[t] = LLD[t] - LLD[t-1]`.
pub fn functionals(llds: &[LldFrame]) -> Result<Vec<f64>> {
    if llds.len() < 2 {
        return Err(Error::Input(format!(
            "need at least 2 frames for functionals, got {}",
            llds.len()
        )));
    }
    let deltas: Vec<LldFrame> = llds
        .windows(2)
        .map(|w| {
            let mut d = [0.0; LLD_COUNT];
            for (i, di) in d.iter_mut().enumerate() {
                *di = w[1].0[i] - w[0].0[i];
            }
            LldFrame(d)
        })
        .collect();

    let mut out = vec![0.0; FEATURE_DIM];
    for (block, series) in [llds, deltas.as_slice()].into_iter().enumerate() {
        for d in 0..LLD_COUNT {
            let (mean, std) = mean_std(series.iter().map(|f| f.0[d]));
            out[2 * block * LLD_COUNT + d] = mean;
            out[(2 * block + 1) * LLD_COUNT + d] = std;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(first_dim: &[f64]) -> Vec<LldFrame> {
        first_dim
            .iter()
            .map(|&v| {
                let mut f = [1.5; LLD_COUNT];
                f[0] = v;
                LldFrame(f)
            })
            .collect()
    }

    #[test]
    fn constant_series_has_zero_spread() {
        let out = functionals(&series(&[2.0; 10])).unwrap();
        assert_eq!(out.len(), 64);
        assert!(out[16..].iter().all(|&v| v == 0.0));
        assert!(out[..16].iter().all(|&v| v == 2.0 || v == 1.5));
    }

    #[test]
    fn hand_statistics() {
        let out = functionals(&series(&[1.0, 2.0, 3.0])).unwrap();
        assert!((out[0] - 2.0).abs() < 1e-15);
        assert!((out[16] - (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((out[16] - 0.8165).abs() < 1e-4);
        assert!((out[32] - 1.0).abs() < 1e-15);
        assert_eq!(out[48], 0.0);
    }

    #[test]
    fn needs_two_frames() {
        assert!(functionals(&series(&[1.0])).is_err());
        assert!(functionals(&[]).is_err());
    }
}
