//! Feed-forward baseline classifier (64, 32, 16, 16, 3).

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::data::{Emotion, FeatureVector, NUM_EMOTIONS};
use crate::error::{Error, Result};
use crate::metric::{argmax_emotion, TrainConfig, TrainLog};
use crate::nn::loss::{normalize_scores, score_cross_entropy};
use crate::nn::{adam_step, chain, Activation, AdamState, DenseNet, Gradients};

pub const FNN_HIDDEN: [usize; 3] = [32, 16, 16];

pub fn fnn_new<R: Rng + ?Sized>(input_dim: usize, rng: &mut R) -> Result<DenseNet> {
    let mut widths = vec![input_dim];
    widths.extend_from_slice(&FNN_HIDDEN);
    widths.push(NUM_EMOTIONS);
    DenseNet::new(&chain(&widths, Activation::Rectifier, Activation::Sigmoid), rng)
}

/// Minibatch cross-entropy training of every layer.
pub fn train_classifier(
    net: &mut DenseNet,
    samples: &[FeatureVector],
    config: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<TrainLog> {
    config.validate()?;
    if net.output_dim() != NUM_EMOTIONS {
        return Err(Error::Shape("classifier must output 3 scores".into()));
    }
    let mut state = AdamState::new(net, config.adam);
    let mut log = TrainLog::default();
    if samples.is_empty() {
        return Ok(log);
    }
    for _ in 0..config.epochs {
        let mut order: Vec<usize> = (0..samples.len()).collect();
        order.shuffle(rng);
        let mut total = 0.0;
        for batch in order.chunks(config.batch_size) {
            let mut grads = Gradients::zeros_like(net);
            for &i in batch {
                let (scores, cache) = net.forward(&samples[i].values)?;
                let (l, ds, _) = score_cross_entropy(&scores, samples[i].emotion.index())?;
                total += l;
                net.backward_into(&cache, &ds, &mut grads)?;
            }
            if !total.is_finite() {
                return Err(Error::diverged(format!("loss became {total}")));
            }
            adam_step(net, &grads, &mut state)?;
        }
        log.epoch_losses.push(total / samples.len() as f64);
    }
    Ok(log)
}

/// Refines all layers of a source-trained classifier on the support set.
/// An empty support returns the source model unchanged.
pub fn fnn_finetune(
    source_model: &DenseNet,
    support: &[FeatureVector],
    config: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<DenseNet> {
    let mut net = source_model.clone();
    train_classifier(&mut net, support, config, rng)?;
    Ok(net)
}

pub fn fnn_probs(net: &DenseNet, x: &[f64]) -> Result<Vec<f64>> {
    Ok(normalize_scores(&net.predict(x)?))
}

pub fn fnn_predict(net: &DenseNet, x: &[f64]) -> Result<Emotion> {
    Ok(argmax_emotion(&net.predict(x)?))
}

/// Activations of the last hidden layer.
pub fn last_hidden(net: &DenseNet, x: &[f64]) -> Result<Vec<f64>> {
    net.hidden_activations(x)?
        .pop()
        .ok_or_else(|| Error::Usage("network has no hidden layer".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Domain;
    use rand::SeedableRng;

    fn blobs(rng: &mut ChaCha8Rng, n: usize) -> Vec<FeatureVector> {
        let mut out = Vec::new();
        for e in Emotion::ALL {
            for _ in 0..n {
                let mut values: Vec<f64> = (0..8).map(|_| rng.random_range(-0.5..0.5)).collect();
                values[e.index()] += 2.0;
                out.push(FeatureVector {
                    utterance_id: format!("u{}", out.len()),
                    speaker_id: "s".into(),
                    emotion: e,
                    domain: Domain::Source,
                    values,
                });
            }
        }
        out
    }

    #[test]
    fn learns_blobs() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let data = blobs(&mut rng, 20);
        let mut net = fnn_new(8, &mut rng).unwrap();
        let cfg = TrainConfig { epochs: 100, ..TrainConfig::default() };
        let log = train_classifier(&mut net, &data, &cfg, &mut rng).unwrap();
        assert!(log.epoch_losses.last().unwrap() < &log.epoch_losses[0]);
        let correct = data.iter().filter(|v| fnn_predict(&net, &v.values).unwrap() == v.emotion).count();
        assert!(correct as f64 / data.len() as f64 > 0.95);
        assert_eq!(last_hidden(&net, &data[0].values).unwrap().len(), 16);
    }

    #[test]
    fn finetune_contract() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let data = blobs(&mut rng, 3);
        let net = fnn_new(8, &mut rng).unwrap();
        let cfg = TrainConfig { epochs: 2, ..TrainConfig::default() };
        assert_eq!(fnn_finetune(&net, &[], &cfg, &mut rng).unwrap(), net);
        assert_ne!(fnn_finetune(&net, &data, &cfg, &mut rng).unwrap(), net);
    }
}
