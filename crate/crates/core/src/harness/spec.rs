use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::aspf::{AspfConfig, PairFormationPolicy};
use crate::data::{SyntheticConfig, MAX_SHOTS};
use crate::error::{Error, Result};
use crate::kv::KvFile;
use crate::metric::{DistanceKind, SiameseConfig, SnnObjective, TrainConfig};
use crate::nn::AdamConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    InDomain,
    OutOfDomain,
    FnnFinetune,
    Mel,
    MelS,
    MelSAspf,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::InDomain,
        Method::OutOfDomain,
        Method::FnnFinetune,
        Method::Mel,
        Method::MelS,
        Method::MelSAspf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::InDomain => "in_domain",
            Method::OutOfDomain => "out_of_domain",
            Method::FnnFinetune => "fnn_finetune",
            Method::Mel => "mel",
            Method::MelS => "mel_s",
            Method::MelSAspf => "mel_s_aspf",
        }
    }

    pub fn is_few_shot(self) -> bool {
        matches!(self, Method::FnnFinetune | Method::Mel | Method::MelS | Method::MelSAspf)
    }

    pub fn uses_source(self) -> bool {
        self != Method::InDomain
    }

    pub fn is_siamese(self) -> bool {
        matches!(self, Method::Mel | Method::MelS | Method::MelSAspf)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

/// Where the feature vectors come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSpec {
    Csv { sources: Vec<PathBuf>, target: PathBuf },
    Synthetic(SyntheticConfig),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyper {
    /// Training from scratch: source pre-training and in-domain folds.
    pub pretrain: TrainConfig,
    /// Adaptation on the support set.
    pub finetune: TrainConfig,
    pub siamese: SiameseConfig,
    pub aspf: AspfConfig,
    /// Pairs per source pre-training epoch; `None` = one per source sample.
    pub source_pairs_per_epoch: Option<usize>,
}

impl Default for Hyper {
    fn default() -> Self {
        Self {
            pretrain: TrainConfig::default(),
            finetune: TrainConfig::default(),
            siamese: SiameseConfig::default(),
            aspf: AspfConfig::default(),
            source_pairs_per_epoch: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub methods: Vec<Method>,
    pub data: DataSpec,
    pub shots: Vec<usize>,
    pub repetitions: usize,
    pub seed: u64,
    pub hyper: Hyper,
    pub pca: bool,
}

impl ExperimentSpec {
    pub fn new(methods: Vec<Method>, data: DataSpec) -> Self {
        Self {
            methods,
            data,
            shots: (1..=MAX_SHOTS).collect(),
            repetitions: 10,
            seed: 0,
            hyper: Hyper::default(),
            pca: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::Config("no methods given".into()));
        }
        let mut seen = self.methods.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.methods.len() {
            return Err(Error::Config("methods listed twice".into()));
        }
        if self.methods.iter().any(|m| m.is_few_shot()) {
            if self.shots.is_empty() {
                return Err(Error::Config("few-shot methods need `k`".into()));
            }
            if self.repetitions == 0 {
                return Err(Error::Config("repetitions must be positive".into()));
            }
        }
        if let Some(&k) = self.shots.iter().find(|&&k| !(1..=MAX_SHOTS).contains(&k)) {
            return Err(Error::Config(format!("k must be in 1..={MAX_SHOTS}, got {k}")));
        }
        if let DataSpec::Csv { sources, .. } = &self.data {
            if sources.is_empty() && self.methods.iter().any(|m| m.uses_source()) {
                return Err(Error::Config("methods need at least one source dataset".into()));
            }
        }
        self.hyper.pretrain.validate()?;
        self.hyper.finetune.validate()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_kv(KvFile::load(path)?)
    }

    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        Self::from_kv(KvFile::parse(path, text)?)
    }

    /// Keys: `method` (list), `synth` (`default` or a config path) or
    /// `sources` + `target` (feature CSV paths), `k` (`a..b` or list),
    /// `repetitions`, `seed`, `pca`, plus hyperparameters. Relative paths
    /// resolve against the spec's directory.
    pub fn from_kv(mut kv: KvFile) -> Result<Self> {
        let base = kv.path().parent().map(Path::to_path_buf).unwrap_or_default();
        let resolve = |p: &str| -> PathBuf {
            let p = Path::new(p);
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        };
        let methods: Vec<Method> = kv
            .take_list("method")?
            .ok_or_else(|| Error::Config("missing `method`".into()))?;
        let synth = kv.take_str("synth");
        let sources = kv.take_list::<String>("sources")?;
        let target = kv.take_str("target");
        let data = match (synth, sources, target) {
            (Some(s), None, None) => DataSpec::Synthetic(if s == "default" {
                SyntheticConfig::default()
            } else {
                SyntheticConfig::load(&resolve(&s))?
            }),
            (None, sources, Some(t)) => DataSpec::Csv {
                sources: sources.unwrap_or_default().iter().map(|s| resolve(s)).collect(),
                target: resolve(&t),
            },
            _ => {
                return Err(Error::Config(
                    "give either `synth` or `target` (with optional `sources`)".into(),
                ))
            }
        };
        let mut spec = Self::new(methods, data);
        if let Some(k) = kv.take_str("k") {
            spec.shots = parse_shots(&k)?;
        }
        spec.repetitions = kv.take_or("repetitions", spec.repetitions)?;
        spec.seed = kv.take_or("seed", spec.seed)?;
        spec.pca = kv.take_or("pca", spec.pca)?;

        let h = &mut spec.hyper;
        let lr = kv.take_or("learning_rate", h.pretrain.adam.learning_rate)?;
        let batch = kv.take_or("batch_size", h.pretrain.batch_size)?;
        let dw = kv.take_or("distance_weight", h.finetune.distance_weight)?;
        let adam = AdamConfig::with_learning_rate(lr);
        h.pretrain = TrainConfig {
            adam,
            epochs: kv.take_or("epochs", h.pretrain.epochs)?,
            batch_size: batch,
            distance_weight: dw,
        };
        h.finetune = TrainConfig {
            adam,
            epochs: kv.take_or("finetune_epochs", h.finetune.epochs)?,
            batch_size: batch,
            distance_weight: dw,
        };
        h.siamese.kappa = kv.take_or("kappa", h.siamese.kappa)?;
        if let Some(m) = kv.take_str("margin") {
            h.siamese.margin = match m.as_str() {
                "inf" | "none" => None,
                v => Some(v.parse().map_err(|_| Error::Config(format!("bad margin `{v}`")))?),
            };
        }
        h.siamese.distance = kv.take_or::<DistanceKind>("distance", h.siamese.distance)?;
        h.siamese.objective = kv.take_or::<SnnObjective>("objective", h.siamese.objective)?;
        h.aspf = AspfConfig {
            iterations: kv.take_or("aspf_iterations", h.aspf.iterations)?,
            epochs_per_iter: kv.take_or("aspf_epochs", h.aspf.epochs_per_iter)?,
            lambda: kv.take_or("lambda", h.aspf.lambda)?,
            pairs_per_epoch: kv.take("pairs_per_epoch")?,
            policy: PairFormationPolicy {
                speaker_scoped: true,
                max_retries: kv.take_or("retries", h.aspf.policy.max_retries)?,
            },
        };
        h.source_pairs_per_epoch = kv.take("source_pairs_per_epoch")?;
        kv.finish()?;
        spec.validate()?;
        Ok(spec)
    }
}

/// `3`, `1..10` (inclusive) or `1, 2, 5`.
pub fn parse_shots(text: &str) -> Result<Vec<usize>> {
    let bad = || Error::Config(format!("bad k specification `{text}`"));
    if let Some((a, b)) = text.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    text.split(',')
        .map(|t| t.trim().parse().map_err(|_| bad()))
        .collect()
}
