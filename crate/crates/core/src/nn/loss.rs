//! Loss primitives shared by the classifiers and the siamese objectives.

use crate::error::{Error, Result};

/// Probabilities are clamped into `[PROB_FLOOR, 1 - PROB_FLOOR]` before taking logs.
pub const PROB_FLOOR: f64 = 1e-12;

#[inline]
fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR)
}

/// `-sum(y * ln p)` and its gradient with respect to `pred`.
pub fn cross_entropy(pred: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>)> {
    if pred.len() != target.len() {
        return Err(Error::Shape(format!(
            "prediction has {} entries, target {}",
            pred.len(),
            target.len()
        )));
    }
    let mut loss = 0.0;
    let grad = pred
        .iter()
        .zip(target)
        .map(|(&p, &y)| {
            let p = clamp_prob(p);
            loss -= y * p.ln();
            -y / p
        })
        .collect();
    Ok((loss, grad))
}

/// Binary cross-entropy of a single probability against a 0/1 label.
/// Returns the loss and `dL/dp`.
pub fn binary_cross_entropy(p: f64, label: bool) -> (f64, f64) {
    let p = clamp_prob(p);
    if label {
        (-p.ln(), -1.0 / p)
    } else {
        (-(1.0 - p).ln(), 1.0 / (1.0 - p))
    }
}

/// Rescales positive class scores so they sum to one.
pub fn normalize_scores(scores: &[f64]) -> Vec<f64> {
    let total: f64 = scores.iter().sum();
    scores.iter().map(|s| s / total).collect()
}

/// Chains a gradient w.r.t. normalized probabilities back to the raw scores.
pub fn normalize_scores_backward(scores: &[f64], prob_grad: &[f64]) -> Vec<f64> {
    let total: f64 = scores.iter().sum();
    let weighted: f64 = prob_grad.iter().zip(scores).map(|(g, s)| g * s).sum();
    prob_grad
        .iter()
        .map(|g| g / total - weighted / (total * total))
        .collect()
}

/// Cross-entropy of sigmoid class scores after normalizing them into a
/// distribution. Returns the loss, the gradient with respect to the raw
/// scores and the normalized probabilities.
pub fn score_cross_entropy(scores: &[f64], class: usize) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    if class >= scores.len() {
        return Err(Error::Shape(format!(
            "class index {class} out of range for {} scores",
            scores.len()
        )));
    }
    let probs = normalize_scores(scores);
    let mut target = vec![0.0; scores.len()];
    target[class] = 1.0;
    let (loss, dp) = cross_entropy(&probs, &target)?;
    let ds = normalize_scores_backward(scores, &dp);
    Ok((loss, ds, probs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_prediction_has_near_zero_loss() {
        let (loss, _) = cross_entropy(&[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]).unwrap();
        assert!(loss < 1e-11);
    }

    #[test]
    fn uniform_prediction_costs_ln3() {
        for c in 0..3 {
            let mut t = [0.0; 3];
            t[c] = 1.0;
            let (loss, _) = cross_entropy(&[1.0 / 3.0; 3], &t).unwrap();
            assert!((loss - 3f64.ln()).abs() < 1e-12);
            assert!((loss - 1.0986).abs() < 1e-4);
        }
    }

    #[test]
    fn hand_value() {
        let (loss, grad) = cross_entropy(&[0.8, 0.1, 0.1], &[1.0, 0.0, 0.0]).unwrap();
        assert!((loss - 0.2231).abs() < 1e-4);
        assert!((grad[0] + 1.25).abs() < 1e-12);
        assert_eq!(&grad[1..], &[0.0, 0.0]);
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(cross_entropy(&[0.5], &[1.0, 0.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn bce_at_half_is_ln2() {
        assert!((binary_cross_entropy(0.5, true).0 - 2f64.ln()).abs() < 1e-15);
        assert!((binary_cross_entropy(0.5, false).0 - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn normalized_gradient_matches_differences() {
        let scores = [0.7, 0.2, 0.45];
        let (_, grad, probs) = score_cross_entropy(&scores, 2).unwrap();
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let h = 1e-6;
        for k in 0..3 {
            let mut up = scores;
            let mut dn = scores;
            up[k] += h;
            dn[k] -= h;
            let fd = (score_cross_entropy(&up, 2).unwrap().0
                - score_cross_entropy(&dn, 2).unwrap().0)
                / (2.0 * h);
            assert!((fd - grad[k]).abs() < 1e-7);
        }
    }
}
