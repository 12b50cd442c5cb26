use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Dataset, Emotion, FeatureVector};
use crate::error::{Error, Result};

pub const MAX_SHOTS: usize = 10;

/// Labelled support set plus the held-out remainder of the target data.
#[derive(Debug, Clone, PartialEq)]
pub struct FewShotSplit {
    pub support: Vec<FeatureVector>,
    pub test: Vec<FeatureVector>,
    pub k: usize,
    pub seed: u64,
    /// (speaker, emotion) cells that had no samples at all.
    pub skipped_cells: Vec<(String, Emotion)>,
}

/// Draws `k` utterances per (speaker, emotion) cell into the support set; the
/// rest become the test set. Cells with at most `k` samples go to support whole.
pub fn few_shot_split(target: &Dataset, k: usize, seed: u64) -> Result<FewShotSplit> {
    if !(1..=MAX_SHOTS).contains(&k) {
        return Err(Error::Protocol(format!("k must be in 1..={MAX_SHOTS}, got {k}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells = target.cells();
    let mut in_support = vec![false; target.len()];
    let mut skipped_cells = Vec::new();
    for speaker in target.speakers() {
        for e in Emotion::ALL {
            match cells.get(&(speaker.clone(), e)) {
                None => {
                    warn!("speaker `{speaker}` has no `{e}` samples; cell skipped");
                    skipped_cells.push((speaker.clone(), e));
                }
                Some(members) => {
                    let mut members = members.clone();
                    members.shuffle(&mut rng);
                    for &i in members.iter().take(k) {
                        in_support[i] = true;
                    }
                }
            }
        }
    }
    let (support, test): (Vec<_>, Vec<_>) = target
        .vectors
        .iter()
        .zip(&in_support)
        .partition(|(_, &s)| s);
    let support: Vec<FeatureVector> = support.into_iter().map(|(v, _)| v.clone()).collect();
    let test: Vec<FeatureVector> = test.into_iter().map(|(v, _)| v.clone()).collect();
    if test.is_empty() {
        return Err(Error::Protocol(format!(
            "k = {k} leaves no test samples in `{}`",
            target.name
        )));
    }
    Ok(FewShotSplit {
        support,
        test,
        k,
        seed,
        skipped_cells,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fold {
    pub speaker: String,
    pub train: Vec<FeatureVector>,
    pub test: Vec<FeatureVector>,
}

/// Leave-one-subject-out: one fold per speaker, in sorted speaker order.
pub fn loso_folds(target: &Dataset) -> Result<Vec<Fold>> {
    let speakers = target.speakers();
    if speakers.len() < 2 {
        return Err(Error::Protocol(format!(
            "leave-one-speaker-out needs at least 2 speakers, `{}` has {}",
            target.name,
            speakers.len()
        )));
    }
    Ok(speakers
        .into_iter()
        .map(|speaker| {
            let (test, train): (Vec<_>, Vec<_>) = target
                .vectors
                .iter()
                .cloned()
                .partition(|v| v.speaker_id == speaker);
            Fold {
                speaker,
                train,
                test,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Domain;
    use std::collections::HashSet;

    fn grid(speakers: usize, per_cell: usize) -> Dataset {
        let mut v = Vec::new();
        for s in 0..speakers {
            for e in Emotion::ALL {
                for i in 0..per_cell {
                    v.push(FeatureVector {
                        utterance_id: format!("s{s}_{e}_{i}"),
                        speaker_id: format!("s{s}"),
                        emotion: e,
                        domain: Domain::Target,
                        values: vec![i as f64],
                    });
                }
            }
        }
        Dataset::new("grid", Domain::Target, v).unwrap()
    }

    fn ids(v: &[FeatureVector]) -> HashSet<String> {
        v.iter().map(|x| x.utterance_id.clone()).collect()
    }

    #[test]
    fn one_shot_counts() {
        let split = few_shot_split(&grid(2, 5), 1, 7).unwrap();
        assert_eq!(split.support.len(), 6);
        assert_eq!(split.test.len(), 24);
        assert!(ids(&split.support).is_disjoint(&ids(&split.test)));
    }

    #[test]
    fn saturated_cells_go_to_support() {
        let mut ds = grid(2, 3);
        // speaker s1 gets extra anger clips
        for i in 3..9 {
            ds.vectors.push(FeatureVector {
                utterance_id: format!("s1_extra_{i}"),
                speaker_id: "s1".into(),
                emotion: Emotion::Anger,
                domain: Domain::Target,
                values: vec![0.0],
            });
        }
        let split = few_shot_split(&ds, 5, 1).unwrap();
        // 5 full cells of 3 plus 5 of the 9 anger clips of s1
        assert_eq!(split.support.len(), 5 * 3 + 5);
        assert_eq!(split.test.len(), 4);
        assert!(split.test.iter().all(|v| v.speaker_id == "s1" && v.emotion == Emotion::Anger));
    }

    #[test]
    fn seeds_change_support() {
        let ds = grid(3, 8);
        let a = few_shot_split(&ds, 2, 1).unwrap();
        let b = few_shot_split(&ds, 2, 2).unwrap();
        assert_ne!(ids(&a.support), ids(&b.support));
        assert_eq!(a, few_shot_split(&ds, 2, 1).unwrap());
    }

    #[test]
    fn k_range_and_empty_test() {
        let ds = grid(2, 2);
        assert!(few_shot_split(&ds, 0, 1).is_err());
        assert!(few_shot_split(&ds, 11, 1).is_err());
        assert_eq!(few_shot_split(&ds, 2, 1).unwrap_err().category(), "protocol");
    }

    #[test]
    fn empty_cells_are_skipped() {
        let mut ds = grid(2, 4);
        ds.vectors.retain(|v| !(v.speaker_id == "s0" && v.emotion == Emotion::Sadness));
        let split = few_shot_split(&ds, 1, 3).unwrap();
        assert_eq!(split.skipped_cells, vec![("s0".to_string(), Emotion::Sadness)]);
        assert_eq!(split.support.len(), 5);
    }

    #[test]
    fn loso_partitions() {
        let ds = grid(10, 2);
        let folds = loso_folds(&ds).unwrap();
        assert_eq!(folds.len(), 10);
        let mut all = HashSet::new();
        for f in &folds {
            assert!(f.test.iter().all(|v| v.speaker_id == f.speaker));
            assert!(f.train.iter().all(|v| v.speaker_id != f.speaker));
            assert_eq!(f.train.len() + f.test.len(), ds.len());
            for id in ids(&f.test) {
                assert!(all.insert(id), "test folds overlap");
            }
        }
        assert_eq!(all, ids(&ds.vectors));
        assert_eq!(loso_folds(&grid(1, 3)).unwrap_err().category(), "protocol");
    }
}
