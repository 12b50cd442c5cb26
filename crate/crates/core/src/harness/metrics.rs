use log::warn;

use crate::data::{Emotion, NUM_EMOTIONS};
use crate::error::{Error, Result};

/// Counts indexed by (true emotion, predicted emotion).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub counts: [[u64; NUM_EMOTIONS]; NUM_EMOTIONS],
}

impl ConfusionMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (Emotion, Emotion)>>(pairs: I) -> Self {
        let mut cm = Self::new();
        for (t, p) in pairs {
            cm.add(t, p);
        }
        cm
    }

    pub fn add(&mut self, truth: Emotion, predicted: Emotion) {
        self.counts[truth.index()][predicted.index()] += 1;
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for (r, o) in self.counts.iter_mut().zip(&other.counts) {
            for (c, x) in r.iter_mut().zip(o) {
                *c += x;
            }
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sum(&self, truth: Emotion) -> u64 {
        self.counts[truth.index()].iter().sum()
    }

    /// Recall of each class, `None` for classes without test samples.
    pub fn recalls(&self) -> [Option<f64>; NUM_EMOTIONS] {
        let mut out = [None; NUM_EMOTIONS];
        for e in Emotion::ALL {
            let n = self.row_sum(e);
            if n > 0 {
                out[e.index()] = Some(self.counts[e.index()][e.index()] as f64 / n as f64);
            }
        }
        out
    }

    /// Row-major counts, for CSV export.
    pub fn flat(&self) -> [u64; NUM_EMOTIONS * NUM_EMOTIONS] {
        let mut out = [0; NUM_EMOTIONS * NUM_EMOTIONS];
        for (i, c) in self.counts.iter().flatten().enumerate() {
            out[i] = *c;
        }
        out
    }

    pub fn from_flat(flat: &[u64]) -> Result<Self> {
        if flat.len() != NUM_EMOTIONS * NUM_EMOTIONS {
            return Err(Error::Shape(format!("confusion matrix needs 9 counts, got {}", flat.len())));
        }
        let mut cm = Self::new();
        for (i, c) in flat.iter().enumerate() {
            cm.counts[i / NUM_EMOTIONS][i % NUM_EMOTIONS] = *c;
        }
        Ok(cm)
    }
}

/// Unweighted average recall over classes that have test samples.
pub fn uar(cm: &ConfusionMatrix) -> Result<f64> {
    if cm.total() == 0 {
        return Err(Error::Metric("empty confusion matrix".into()));
    }
    let recalls = cm.recalls();
    for e in Emotion::ALL {
        if recalls[e.index()].is_none() {
            warn!("no `{e}` test samples; class excluded from UAR");
        }
    }
    let present: Vec<f64> = recalls.iter().flatten().copied().collect();
    Ok(present.iter().sum::<f64>() / present.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use Emotion::*;

    #[test]
    fn uar_examples() {
        let perfect = ConfusionMatrix::from_pairs([(Anger, Anger), (Happiness, Happiness), (Sadness, Sadness)]);
        assert_eq!(uar(&perfect).unwrap(), 1.0);
        let cm = ConfusionMatrix::from_pairs([
            (Anger, Anger),
            (Anger, Anger),
            (Happiness, Happiness),
            (Happiness, Sadness),
            (Sadness, Anger),
        ]);
        assert_eq!(uar(&cm).unwrap(), 0.5);
        assert_eq!(uar(&ConfusionMatrix::new()).unwrap_err().category(), "metric");
    }

    #[test]
    fn missing_class_is_excluded() {
        let cm = ConfusionMatrix::from_pairs([(Anger, Anger), (Sadness, Anger)]);
        assert_eq!(uar(&cm).unwrap(), 0.5);
    }

    #[test]
    fn flat_round_trip() {
        let cm = ConfusionMatrix::from_pairs([(Anger, Sadness), (Happiness, Anger)]);
        assert_eq!(ConfusionMatrix::from_flat(&cm.flat()).unwrap(), cm);
        assert_eq!(cm.flat()[2], 1);
    }
}
