use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::data::{Emotion, FeatureVector, NUM_EMOTIONS};
use crate::error::{Error, Result};
use crate::metric::{IndexPair, PairStream};

pub const DEFAULT_RETRIES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairFormationPolicy {
    /// Draw both members from one speaker (target phase) or ignore speakers (source phase).
    pub speaker_scoped: bool,
    pub max_retries: usize,
}

impl PairFormationPolicy {
    /// Probability of the same-emotion branch; fixed.
    pub const SAME_CLASS_PROB: f64 = 0.5;

    pub fn source() -> Self {
        Self {
            speaker_scoped: false,
            max_retries: DEFAULT_RETRIES,
        }
    }

    pub fn target() -> Self {
        Self {
            speaker_scoped: true,
            max_retries: DEFAULT_RETRIES,
        }
    }
}

/// Pools of sample indices per (scope, emotion).
#[derive(Debug, Clone)]
pub struct PairFormer {
    policy: PairFormationPolicy,
    scopes: Vec<[Vec<usize>; NUM_EMOTIONS]>,
}

impl PairFormer {
    pub fn new(samples: &[FeatureVector], policy: PairFormationPolicy) -> Result<Self> {
        let scope_names: Vec<&str> = if policy.speaker_scoped {
            let set: BTreeSet<&str> = samples.iter().map(|v| v.speaker_id.as_str()).collect();
            set.into_iter().collect()
        } else {
            vec![""]
        };
        let mut scopes: Vec<[Vec<usize>; NUM_EMOTIONS]> =
            vec![Default::default(); scope_names.len()];
        for (i, v) in samples.iter().enumerate() {
            let s = if policy.speaker_scoped {
                scope_names.binary_search(&v.speaker_id.as_str()).expect("collected above")
            } else {
                0
            };
            scopes[s][v.emotion.index()].push(i);
        }
        let usable = scopes
            .iter()
            .any(|pools| pools.iter().filter(|p| !p.is_empty()).count() >= 2);
        if !usable {
            return Err(Error::Sampling(
                "pair formation needs at least two emotions within one scope".into(),
            ));
        }
        Ok(Self { policy, scopes })
    }

    pub fn policy(&self) -> PairFormationPolicy {
        self.policy
    }

    pub fn scope_count(&self) -> usize {
        self.scopes.len()
    }

    /// Indices of the pool for `(scope, emotion)`.
    pub fn pool(&self, scope: usize, emotion: Emotion) -> &[usize] {
        &self.scopes[scope][emotion.index()]
    }

    /// One pair drawn with sample weights `pi` (indexed like the samples).
    ///
    /// The same/different branch is decided once; failed draws re-pick only
    /// the scope and emotions.
    pub fn form_pair<R: Rng + ?Sized>(&self, rng: &mut R, pi: &[f64]) -> Result<IndexPair> {
        let same = rng.random::<f64>() > PairFormationPolicy::SAME_CLASS_PROB;
        for _ in 0..self.policy.max_retries.max(1) {
            let s = rng.random_range(0..self.scopes.len());
            let ck = rng.random_range(0..NUM_EMOTIONS);
            let cm = if same {
                ck
            } else {
                (ck + rng.random_range(1..NUM_EMOTIONS)) % NUM_EMOTIONS
            };
            let (pk, pm) = (&self.scopes[s][ck], &self.scopes[s][cm]);
            if pk.is_empty() || pm.is_empty() {
                continue;
            }
            let left = weighted_pick(rng, pk, pi)?;
            let right = weighted_pick(rng, pm, pi)?;
            return Ok(IndexPair {
                left,
                right,
                same_class: same,
            });
        }
        Err(Error::Sampling(format!(
            "no {} pair found after {} retries",
            if same { "same-emotion" } else { "cross-emotion" },
            self.policy.max_retries
        )))
    }

    /// Per-epoch stream of `count` pairs weighted by `pi`.
    pub fn stream<'a>(&'a self, pi: &'a [f64], count: usize) -> WeightedPairs<'a> {
        WeightedPairs {
            former: self,
            pi,
            count,
        }
    }
}

fn weighted_pick<R: Rng + ?Sized>(rng: &mut R, pool: &[usize], pi: &[f64]) -> Result<usize> {
    let weight = |i: usize| pi.get(i).copied().ok_or_else(|| Error::UnknownSample(format!("#{i}")));
    let mut total = 0.0;
    for &i in pool {
        total += weight(i)?;
    }
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for &i in pool {
        acc += weight(i)?;
        if u < acc {
            return Ok(i);
        }
    }
    Ok(*pool.last().expect("non-empty pool"))
}

pub struct WeightedPairs<'a> {
    former: &'a PairFormer,
    pi: &'a [f64],
    count: usize,
}

impl PairStream for WeightedPairs<'_> {
    fn epoch_pairs(&mut self, rng: &mut ChaCha8Rng) -> Result<Vec<IndexPair>> {
        (0..self.count).map(|_| self.former.form_pair(rng, self.pi)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Domain;
    use rand::SeedableRng;

    fn samples(spec: &[(&str, Emotion)]) -> Vec<FeatureVector> {
        spec.iter()
            .enumerate()
            .map(|(i, (s, e))| FeatureVector {
                utterance_id: format!("u{i}"),
                speaker_id: s.to_string(),
                emotion: *e,
                domain: Domain::Target,
                values: vec![0.0],
            })
            .collect()
    }

    #[test]
    fn single_emotion_is_rejected() {
        let s = samples(&[("a", Emotion::Anger), ("a", Emotion::Anger)]);
        assert_eq!(PairFormer::new(&s, PairFormationPolicy::source()).unwrap_err().category(), "sampling");
    }

    #[test]
    fn scoped_pairs_stay_within_speaker() {
        let s = samples(&[
            ("a", Emotion::Anger),
            ("a", Emotion::Sadness),
            ("b", Emotion::Anger),
            ("b", Emotion::Happiness),
        ]);
        let f = PairFormer::new(&s, PairFormationPolicy::target()).unwrap();
        let pi = vec![1.0; s.len()];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..500 {
            let p = f.form_pair(&mut rng, &pi).unwrap();
            assert_eq!(s[p.left].speaker_id, s[p.right].speaker_id);
            assert_eq!(p.same_class, s[p.left].emotion == s[p.right].emotion);
        }
    }

    #[test]
    fn scope_must_hold_two_emotions() {
        // every speaker holds one emotion; scoped different-class draws can never succeed
        let s = samples(&[("a", Emotion::Anger), ("b", Emotion::Sadness)]);
        assert!(PairFormer::new(&s, PairFormationPolicy::target()).is_err());
        let f = PairFormer::new(&s, PairFormationPolicy::source()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(f.form_pair(&mut rng, &[1.0, 1.0]).is_ok());
    }
}
