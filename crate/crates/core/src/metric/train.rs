use log::warn;
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use super::loss::{joint_loss, snn_loss, Labelled, LossGrads, SamplePair};
use super::model::SiameseModel;
use crate::data::FeatureVector;
use crate::error::{Error, Result};
use crate::nn::{adam_step, AdamConfig, AdamState};

/// A pair as indices into the training samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct IndexPair {
    pub left: usize,
    pub right: usize,
    pub same_class: bool,
}

/// Supplies the pairs for each epoch.
pub trait PairStream {
    fn epoch_pairs(&mut self, rng: &mut ChaCha8Rng) -> Result<Vec<IndexPair>>;
}

impl<F> PairStream for F
where
    F: FnMut(&mut ChaCha8Rng) -> Result<Vec<IndexPair>>,
{
    fn epoch_pairs(&mut self, rng: &mut ChaCha8Rng) -> Result<Vec<IndexPair>> {
        self(rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub adam: AdamConfig,
    pub epochs: usize,
    pub batch_size: usize,
    /// Weight of the pair term in the joint objective.
    pub distance_weight: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            adam: AdamConfig::default(),
            epochs: 250,
            batch_size: 32,
            distance_weight: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if !(self.adam.learning_rate > 0.0) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if !(self.distance_weight >= 0.0 && self.distance_weight.is_finite()) {
            return Err(Error::Config("distance_weight must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// Mean per-item loss of every epoch.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub epoch_losses: Vec<f64>,
}

/// Adam state for every network of a [`SiameseModel`].
#[derive(Debug, Clone)]
pub struct SiameseOptimizer {
    trunk: AdamState,
    verification_head: Option<AdamState>,
    head: Option<AdamState>,
}

impl SiameseOptimizer {
    pub fn new(model: &SiameseModel, config: AdamConfig) -> Self {
        Self {
            trunk: AdamState::new(&model.trunk, config),
            verification_head: model.verification_head.as_ref().map(|n| AdamState::new(n, config)),
            head: model.head.as_ref().map(|n| AdamState::new(n, config)),
        }
    }

    pub fn step(&mut self, model: &mut SiameseModel, lg: &LossGrads) -> Result<()> {
        if !lg.loss.is_finite() {
            return Err(Error::diverged(format!("loss became {}", lg.loss)));
        }
        adam_step(&mut model.trunk, &lg.grads.trunk, &mut self.trunk)?;
        if let (Some(net), Some(g), Some(s)) = (
            model.verification_head.as_mut(),
            lg.grads.verification_head.as_ref(),
            self.verification_head.as_mut(),
        ) {
            adam_step(net, g, s)?;
        }
        if let (Some(net), Some(g), Some(s)) = (model.head.as_mut(), lg.grads.head.as_ref(), self.head.as_mut()) {
            adam_step(net, g, s)?;
        }
        Ok(())
    }
}

fn to_pairs<'a>(samples: &'a [FeatureVector], idx: &[IndexPair]) -> Result<Vec<SamplePair<'a>>> {
    idx.iter()
        .map(|p| {
            let (a, b) = match (samples.get(p.left), samples.get(p.right)) {
                (Some(a), Some(b)) => (a, b),
                _ => return Err(Error::Usage("pair index out of range".into())),
            };
            Ok(SamplePair {
                left: &a.values,
                right: &b.values,
                same_class: p.same_class,
            })
        })
        .collect()
}

/// Trains the trunk (and verification unit) on the configured pair objective.
pub fn train_mel<S: PairStream + ?Sized>(
    model: &mut SiameseModel,
    samples: &[FeatureVector],
    stream: &mut S,
    config: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<TrainLog> {
    let mut opt = SiameseOptimizer::new(model, config.adam);
    train_mel_with(model, &mut opt, samples, stream, config, rng)
}

pub fn train_mel_with<S: PairStream + ?Sized>(
    model: &mut SiameseModel,
    opt: &mut SiameseOptimizer,
    samples: &[FeatureVector],
    stream: &mut S,
    config: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<TrainLog> {
    config.validate()?;
    let mut log = TrainLog::default();
    for _ in 0..config.epochs {
        let idx = stream.epoch_pairs(rng)?;
        if idx.is_empty() {
            return Err(Error::Sampling("pair stream produced no pairs".into()));
        }
        let pairs = to_pairs(samples, &idx)?;
        let mut total = 0.0;
        for batch in pairs.chunks(config.batch_size) {
            let lg = snn_loss(model, batch)?;
            total += lg.loss;
            opt.step(model, &lg)?;
        }
        log.epoch_losses.push(total / pairs.len() as f64);
    }
    Ok(log)
}

/// Joint training of head and trunk on the labelled support plus support pairs.
pub fn train_mels<S: PairStream + ?Sized>(
    model: &mut SiameseModel,
    support: &[FeatureVector],
    stream: &mut S,
    config: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<TrainLog> {
    let mut opt = SiameseOptimizer::new(model, config.adam);
    train_mels_with(model, &mut opt, support, stream, config, rng)
}

pub fn train_mels_with<S: PairStream + ?Sized>(
    model: &mut SiameseModel,
    opt: &mut SiameseOptimizer,
    support: &[FeatureVector],
    stream: &mut S,
    config: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<TrainLog> {
    config.validate()?;
    if model.head.is_none() {
        return Err(Error::Usage("joint training needs an emotion head".into()));
    }
    if support.is_empty() {
        return Err(Error::Usage("joint training needs labelled samples".into()));
    }
    let use_pairs = support.len() >= 2 && config.distance_weight > 0.0;
    if support.len() < 2 {
        warn!("support has fewer than two samples; pair term skipped");
    }
    let bs = config.batch_size;
    let mut log = TrainLog::default();
    for _ in 0..config.epochs {
        // fresh permutation each epoch keeps split runs identical to one long run
        let mut order: Vec<usize> = (0..support.len()).collect();
        order.shuffle(rng);
        let idx = if use_pairs { stream.epoch_pairs(rng)? } else { Vec::new() };
        let pairs = to_pairs(support, &idx)?;
        let labelled: Vec<Labelled<'_>> = order
            .iter()
            .map(|&i| Labelled {
                x: &support[i].values,
                emotion: support[i].emotion,
            })
            .collect();
        let steps = labelled.len().max(pairs.len()).div_ceil(bs);
        let mut total = 0.0;
        for s in 0..steps {
            let lb = chunk(&labelled, s, bs);
            let pb = chunk(&pairs, s, bs);
            let lg = joint_loss(model, lb, pb, config.distance_weight)?;
            total += lg.loss;
            opt.step(model, &lg)?;
        }
        log.epoch_losses.push(total / labelled.len() as f64);
    }
    Ok(log)
}

fn chunk<T>(items: &[T], step: usize, bs: usize) -> &[T] {
    let start = (step * bs).min(items.len());
    let end = (start + bs).min(items.len());
    &items[start..end]
}
