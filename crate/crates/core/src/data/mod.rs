//! Labelled feature datasets, splits and the synthetic domain-shift generator.

mod csv_io;
mod manifest;
mod split;
mod synth;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

pub use csv_io::{load_feature_csv, read_feature_csv, write_feature_csv};
pub use manifest::{extract_manifest, parse_manifest, ManifestEntry};
pub use split::{few_shot_split, loso_folds, FewShotSplit, Fold, MAX_SHOTS};
pub use synth::{synth_generate, Covariance, SyntheticConfig};

use crate::error::{Error, Result};
use crate::features::{fit_standardizer, StandardizationStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Emotion {
    Anger,
    Happiness,
    Sadness,
}

pub const NUM_EMOTIONS: usize = 3;

impl Emotion {
    /// Fixed order; also the tie-break order everywhere.
    pub const ALL: [Emotion; NUM_EMOTIONS] = [Emotion::Anger, Emotion::Happiness, Emotion::Sadness];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Emotion> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Emotion::Anger => "anger",
            Emotion::Happiness => "happiness",
            Emotion::Sadness => "sadness",
        }
    }

    pub fn one_hot(self) -> [f64; NUM_EMOTIONS] {
        let mut v = [0.0; NUM_EMOTIONS];
        v[self.index()] = 1.0;
        v
    }
}

impl fmt::Display for Emotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Emotion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "anger" => Ok(Emotion::Anger),
            "happiness" => Ok(Emotion::Happiness),
            "sadness" => Ok(Emotion::Sadness),
            other => Err(Error::Schema(format!("unknown emotion `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    Source,
    Target,
}

impl Domain {
    pub fn name(self) -> &'static str {
        match self {
            Domain::Source => "source",
            Domain::Target => "target",
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Domain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "source" => Ok(Domain::Source),
            "target" => Ok(Domain::Target),
            other => Err(Error::Schema(format!("unknown domain `{other}`"))),
        }
    }
}

/// One utterance's descriptor plus its metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub utterance_id: String,
    pub speaker_id: String,
    pub emotion: Emotion,
    pub domain: Domain,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub role: Domain,
    pub vectors: Vec<FeatureVector>,
}

impl Dataset {
    /// Validates ids, dimensions and finiteness.
    pub fn new(name: impl Into<String>, role: Domain, vectors: Vec<FeatureVector>) -> Result<Self> {
        let name = name.into();
        let mut seen = HashSet::with_capacity(vectors.len());
        let dim = vectors.first().map(|v| v.values.len());
        for v in &vectors {
            if v.speaker_id.is_empty() {
                return Err(Error::Schema(format!(
                    "utterance `{}` has an empty speaker id",
                    v.utterance_id
                )));
            }
            if !seen.insert(v.utterance_id.as_str()) {
                return Err(Error::Schema(format!(
                    "duplicate utterance id `{}` in `{name}`",
                    v.utterance_id
                )));
            }
            if Some(v.values.len()) != dim {
                return Err(Error::Shape(format!(
                    "utterance `{}` has {} dims, expected {}",
                    v.utterance_id,
                    v.values.len(),
                    dim.unwrap_or(0)
                )));
            }
            if v.values.iter().any(|x| !x.is_finite()) {
                return Err(Error::Schema(format!(
                    "utterance `{}` has non-finite features",
                    v.utterance_id
                )));
            }
        }
        Ok(Self {
            name,
            role,
            vectors,
        })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, |v| v.values.len())
    }

    /// Speaker ids in sorted order.
    pub fn speakers(&self) -> Vec<String> {
        self.vectors
            .iter()
            .map(|v| v.speaker_id.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn emotions_present(&self) -> Vec<Emotion> {
        self.vectors
            .iter()
            .map(|v| v.emotion)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// Vector indices grouped by (speaker, emotion) in dataset order.
    pub fn cells(&self) -> BTreeMap<(String, Emotion), Vec<usize>> {
        let mut cells: BTreeMap<(String, Emotion), Vec<usize>> = BTreeMap::new();
        for (i, v) in self.vectors.iter().enumerate() {
            cells
                .entry((v.speaker_id.clone(), v.emotion))
                .or_default()
                .push(i);
        }
        cells
    }

    pub fn utterance_ids(&self) -> impl Iterator<Item = &str> {
        self.vectors.iter().map(|v| v.utterance_id.as_str())
    }

    pub fn fit_stats(&self) -> Result<StandardizationStats> {
        fit_standardizer(&self.name, self.vectors.iter().map(|v| v.values.as_slice()))
    }

    /// Z-scores every vector with statistics fitted on this dataset alone.
    pub fn standardized(&self) -> Result<(Dataset, StandardizationStats)> {
        let stats = self.fit_stats()?;
        let vectors = self
            .vectors
            .iter()
            .map(|v| {
                Ok(FeatureVector {
                    values: stats.apply(&v.values)?,
                    ..v.clone()
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((
            Dataset {
                name: self.name.clone(),
                role: self.role,
                vectors,
            },
            stats,
        ))
    }
}
