use super::model::{embed, SiameseModel};
use crate::data::{Emotion, FeatureVector, NUM_EMOTIONS};
use crate::error::{Error, Result};

/// Per-emotion mean of the labelled support, in input space.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassCenters {
    centers: [Vec<f64>; NUM_EMOTIONS],
}

impl ClassCenters {
    pub fn new(centers: [Vec<f64>; NUM_EMOTIONS]) -> Result<Self> {
        let d = centers[0].len();
        if d == 0 || centers.iter().any(|c| c.len() != d) {
            return Err(Error::Shape("class centers must share a non-zero dimension".into()));
        }
        Ok(Self { centers })
    }

    pub fn get(&self, e: Emotion) -> &[f64] {
        &self.centers[e.index()]
    }

    /// Embeds each center once, for classifying many inputs.
    pub fn embedded(&self, model: &SiameseModel) -> Result<EmbeddedCenters> {
        let [a, h, s] = &self.centers;
        Ok(EmbeddedCenters {
            centers: [embed(model, a)?, embed(model, h)?, embed(model, s)?],
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedCenters {
    pub centers: [Vec<f64>; NUM_EMOTIONS],
}

impl EmbeddedCenters {
    /// Nearest center to an embedding; ties go to the earlier emotion.
    pub fn nearest(&self, model: &SiameseModel, embedding: &[f64]) -> Emotion {
        let mut best = Emotion::Anger;
        let mut best_d = f64::INFINITY;
        for e in Emotion::ALL {
            let d = model.config.distance.eval(embedding, &self.centers[e.index()]);
            if d < best_d {
                best_d = d;
                best = e;
            }
        }
        best
    }

    pub fn classify(&self, model: &SiameseModel, x: &[f64]) -> Result<Emotion> {
        Ok(self.nearest(model, &embed(model, x)?))
    }
}

pub fn compute_centers(support: &[FeatureVector]) -> Result<ClassCenters> {
    let dim = support
        .first()
        .map(|v| v.values.len())
        .ok_or_else(|| Error::Protocol("cannot compute centers of an empty support set".into()))?;
    let mut sums = [vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]];
    let mut counts = [0usize; NUM_EMOTIONS];
    for v in support {
        if v.values.len() != dim {
            return Err(Error::Shape("support vectors differ in dimension".into()));
        }
        let i = v.emotion.index();
        counts[i] += 1;
        for (s, x) in sums[i].iter_mut().zip(&v.values) {
            *s += x;
        }
    }
    for e in Emotion::ALL {
        let n = counts[e.index()];
        if n == 0 {
            return Err(Error::Protocol(format!("support has no `{e}` samples")));
        }
        for s in &mut sums[e.index()] {
            *s /= n as f64;
        }
    }
    ClassCenters::new(sums)
}

/// Emotion whose embedded center is closest to the embedding of `x`.
pub fn mel_classify(model: &SiameseModel, x: &[f64], centers: &ClassCenters) -> Result<Emotion> {
    centers.embedded(model)?.classify(model, x)
}
