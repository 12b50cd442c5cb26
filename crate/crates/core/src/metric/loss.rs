//! Pair and classification objectives with their gradients.
//!
//! All losses are sums over the batch. Pair losses push gradients through
//! both streams into the one shared trunk.

use super::model::{SiameseGrads, SiameseModel, SnnObjective};
use crate::data::{Emotion, NUM_EMOTIONS};
use crate::error::{Error, Result};
use crate::nn::binary_cross_entropy;
use crate::nn::loss::{normalize_scores, score_cross_entropy};

/// Two inputs and whether they share an emotion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplePair<'a> {
    pub left: &'a [f64],
    pub right: &'a [f64],
    pub same_class: bool,
}

/// One labelled input for the emotion head.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Labelled<'a> {
    pub x: &'a [f64],
    pub emotion: Emotion,
}

#[derive(Debug, Clone)]
pub struct LossGrads {
    pub loss: f64,
    pub grads: SiameseGrads,
}

/// `sum_same d - kappa * sum_diff min(d, margin)` over the batch.
pub fn mel_loss(model: &SiameseModel, pairs: &[SamplePair<'_>]) -> Result<LossGrads> {
    if pairs.is_empty() {
        return Err(Error::Usage("distance loss needs at least one pair".into()));
    }
    let cfg = model.config;
    let mut grads = SiameseGrads::zeros_like(model);
    let mut loss = 0.0;
    for p in pairs {
        let (ei, ci) = model.trunk.forward(p.left)?;
        let (ej, cj) = model.trunk.forward(p.right)?;
        let (d, dd) = cfg.distance.eval_grad(&ei, &ej);
        let coef = if p.same_class {
            loss += d;
            1.0
        } else {
            let clamped = cfg.margin.map_or(false, |m| d >= m);
            loss -= cfg.kappa * cfg.margin.map_or(d, |m| d.min(m));
            if clamped {
                0.0
            } else {
                -cfg.kappa
            }
        };
        if coef == 0.0 {
            continue;
        }
        let gi: Vec<f64> = dd.iter().map(|g| coef * g).collect();
        let gj: Vec<f64> = gi.iter().map(|g| -g).collect();
        model.trunk.backward_into(&ci, &gi, &mut grads.trunk)?;
        model.trunk.backward_into(&cj, &gj, &mut grads.trunk)?;
    }
    Ok(LossGrads { loss, grads })
}

/// Probability that a pair shares an emotion, from the verification unit.
pub fn verification_prob(model: &SiameseModel, a: &[f64], b: &[f64]) -> Result<f64> {
    let head = model
        .verification_head
        .as_ref()
        .ok_or_else(|| Error::Usage("model has no verification head".into()))?;
    let ea = model.trunk.predict(a)?;
    let eb = model.trunk.predict(b)?;
    let h: Vec<f64> = ea.iter().zip(&eb).map(|(x, y)| (x - y).abs()).collect();
    Ok(head.predict(&h)?[0])
}

/// Summed binary cross-entropy of the verification unit over `|f(x_i) - f(x_j)|`.
pub fn verification_loss(model: &SiameseModel, pairs: &[SamplePair<'_>]) -> Result<LossGrads> {
    let head = model
        .verification_head
        .as_ref()
        .ok_or_else(|| Error::Usage("model has no verification head".into()))?;
    if pairs.is_empty() {
        return Err(Error::Usage("verification loss needs at least one pair".into()));
    }
    let mut grads = SiameseGrads::zeros_like(model);
    let vgrads = grads.verification_head.as_mut().expect("head present");
    let mut loss = 0.0;
    for p in pairs {
        let (ei, ci) = model.trunk.forward(p.left)?;
        let (ej, cj) = model.trunk.forward(p.right)?;
        let h: Vec<f64> = ei.iter().zip(&ej).map(|(x, y)| (x - y).abs()).collect();
        let (prob, hc) = head.forward(&h)?;
        let (l, dl_dp) = binary_cross_entropy(prob[0], p.same_class);
        loss += l;
        let dh = head.backward_into(&hc, &[dl_dp], vgrads)?;
        let gi: Vec<f64> = dh
            .iter()
            .zip(ei.iter().zip(&ej))
            .map(|(g, (x, y))| {
                if x > y {
                    *g
                } else if x < y {
                    -g
                } else {
                    0.0
                }
            })
            .collect();
        let gj: Vec<f64> = gi.iter().map(|g| -g).collect();
        model.trunk.backward_into(&ci, &gi, &mut grads.trunk)?;
        model.trunk.backward_into(&cj, &gj, &mut grads.trunk)?;
    }
    Ok(LossGrads { loss, grads })
}

/// The configured pair objective.
pub fn snn_loss(model: &SiameseModel, pairs: &[SamplePair<'_>]) -> Result<LossGrads> {
    match model.config.objective {
        SnnObjective::Distance => mel_loss(model, pairs),
        SnnObjective::Verification => verification_loss(model, pairs),
    }
}

/// Summed cross-entropy of `g_V(f_W(x))` through head and trunk.
pub fn classification_loss(model: &SiameseModel, samples: &[Labelled<'_>]) -> Result<LossGrads> {
    let head = model
        .head
        .as_ref()
        .ok_or_else(|| Error::Usage("model has no emotion head".into()))?;
    let mut grads = SiameseGrads::zeros_like(model);
    let hgrads = grads.head.as_mut().expect("head present");
    let mut loss = 0.0;
    for s in samples {
        let (e, tc) = model.trunk.forward(s.x)?;
        let (scores, hc) = head.forward(&e)?;
        let (l, ds, _) = score_cross_entropy(&scores, s.emotion.index())?;
        loss += l;
        let de = head.backward_into(&hc, &ds, hgrads)?;
        model.trunk.backward_into(&tc, &de, &mut grads.trunk)?;
    }
    Ok(LossGrads { loss, grads })
}

/// `L_e + distance_weight * L_d`; either part may be empty.
pub fn joint_loss(
    model: &SiameseModel,
    labelled: &[Labelled<'_>],
    pairs: &[SamplePair<'_>],
    distance_weight: f64,
) -> Result<LossGrads> {
    let mut out = if labelled.is_empty() {
        LossGrads {
            loss: 0.0,
            grads: SiameseGrads::zeros_like(model),
        }
    } else {
        classification_loss(model, labelled)?
    };
    if !pairs.is_empty() && distance_weight != 0.0 {
        let d = snn_loss(model, pairs)?;
        out.loss += distance_weight * d.loss;
        out.grads.add_scaled(&d.grads, distance_weight);
    }
    Ok(out)
}

/// Normalized emotion probabilities from the head.
pub fn mels_predict(model: &SiameseModel, x: &[f64]) -> Result<[f64; NUM_EMOTIONS]> {
    let head = model
        .head
        .as_ref()
        .ok_or_else(|| Error::Usage("model has no emotion head".into()))?;
    let scores = head.predict(&model.trunk.predict(x)?)?;
    let p = normalize_scores(&scores);
    Ok([p[0], p[1], p[2]])
}

/// Index of the largest score; ties go to the earliest emotion.
pub fn argmax_emotion(scores: &[f64]) -> Emotion {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    Emotion::from_index(best).expect("three scores")
}
