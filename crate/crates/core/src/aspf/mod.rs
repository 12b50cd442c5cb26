//! Adaptive sample-pair formation: error-driven selection likelihoods and
//! the iterative train/sweep loop built on them.

mod pairs;
mod table;

use std::io::Write;

use rand_chacha::ChaCha8Rng;

pub use pairs::{PairFormationPolicy, PairFormer, WeightedPairs, DEFAULT_RETRIES};
pub use table::{selection_prob, LikelihoodTable};

use crate::data::FeatureVector;
use crate::error::{Error, Result};
use crate::metric::{mels_predict, train_mels_with, SiameseModel, SiameseOptimizer, TrainConfig, TrainLog};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AspfConfig {
    pub iterations: usize,
    pub epochs_per_iter: usize,
    pub lambda: f64,
    /// Pairs per epoch; `None` means one per training sample.
    pub pairs_per_epoch: Option<usize>,
    pub policy: PairFormationPolicy,
}

impl Default for AspfConfig {
    fn default() -> Self {
        Self {
            iterations: 25,
            epochs_per_iter: 10,
            lambda: 0.1,
            pairs_per_epoch: None,
            policy: PairFormationPolicy::target(),
        }
    }
}

/// Likelihood snapshots: the initial table, then one per sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct PiHistory {
    pub ids: Vec<String>,
    pub snapshots: Vec<Vec<f64>>,
}

impl PiHistory {
    pub fn new(table: &LikelihoodTable) -> Self {
        Self {
            ids: table.ids().to_vec(),
            snapshots: vec![table.values().to_vec()],
        }
    }

    pub fn record(&mut self, table: &LikelihoodTable) {
        self.snapshots.push(table.values().to_vec());
    }

    /// Columns `iteration,utterance_id,pi`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::Export(e.to_string());
        w.write_record(["iteration", "utterance_id", "pi"]).map_err(err)?;
        for (t, snap) in self.snapshots.iter().enumerate() {
            for (id, pi) in self.ids.iter().zip(snap) {
                w.write_record([t.to_string(), id.clone(), format!("{pi:?}")]).map_err(err)?;
            }
        }
        w.flush().map_err(|e| Error::Export(e.to_string()))
    }
}

/// Updates every sample's likelihood from `predict`, then closes the sweep.
pub fn aspf_sweep<F>(table: &mut LikelihoodTable, samples: &[FeatureVector], mut predict: F) -> Result<()>
where
    F: FnMut(&FeatureVector) -> Result<[f64; 3]>,
{
    if samples.len() != table.len() {
        return Err(Error::Shape("likelihood table does not match the samples".into()));
    }
    for (i, v) in samples.iter().enumerate() {
        if table.ids()[i] != v.utterance_id {
            return Err(Error::UnknownSample(v.utterance_id.clone()));
        }
        let p = predict(v)?;
        table.update_at(i, &p, &v.emotion.one_hot())?;
    }
    table.advance();
    Ok(())
}

#[derive(Debug, Clone)]
pub struct AspfOutcome {
    pub table: LikelihoodTable,
    pub history: PiHistory,
    pub log: TrainLog,
}

/// Alternates joint training on likelihood-weighted pairs with error sweeps.
pub fn train_mels_aspf(
    model: &mut SiameseModel,
    samples: &[FeatureVector],
    aspf: &AspfConfig,
    train: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<AspfOutcome> {
    let mut table = LikelihoodTable::for_samples(samples, aspf.lambda)?;
    let former = PairFormer::new(samples, aspf.policy)?;
    let count = aspf.pairs_per_epoch.unwrap_or(samples.len());
    let mut history = PiHistory::new(&table);
    let mut log = TrainLog::default();
    let mut opt = SiameseOptimizer::new(model, train.adam);
    let inner = TrainConfig {
        epochs: aspf.epochs_per_iter,
        ..*train
    };
    for _ in 0..aspf.iterations {
        let pi = table.values().to_vec();
        let mut stream = former.stream(&pi, count);
        let l = train_mels_with(model, &mut opt, samples, &mut stream, &inner, rng)?;
        log.epoch_losses.extend(l.epoch_losses);
        let m: &SiameseModel = model;
        aspf_sweep(&mut table, samples, |v| mels_predict(m, &v.values))?;
        history.record(&table);
    }
    Ok(AspfOutcome { table, history, log })
}
