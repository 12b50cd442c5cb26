//! Property tests over splits, serialization and the classifiers.

use std::path::Path;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use emoshot::data::{
    few_shot_split, loso_folds, read_feature_csv, write_feature_csv, Dataset, Domain, Emotion, FeatureVector,
};
use emoshot::harness::{uar, ConfusionMatrix};
use emoshot::metric::checkpoint::{model_from_str, model_to_string};
use emoshot::metric::{compute_centers, mel_classify, DistanceKind, SiameseConfig, SiameseModel};

/// `speakers x 3 emotions x per_cell` vectors of dimension `dim`.
fn dataset(speakers: usize, per_cell: usize, dim: usize, values: &[f64]) -> Dataset {
    let mut vectors = Vec::new();
    let mut it = values.iter().cycle();
    for s in 0..speakers {
        for e in Emotion::ALL {
            for i in 0..per_cell {
                vectors.push(FeatureVector {
                    utterance_id: format!("s{s}_{}_{i}", e.name()),
                    speaker_id: format!("s{s}"),
                    emotion: e,
                    domain: Domain::Target,
                    values: (0..dim).map(|_| *it.next().unwrap()).collect(),
                });
            }
        }
    }
    Dataset::new("t", Domain::Target, vectors).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn few_shot_split_partitions(speakers in 1usize..6, per_cell in 2usize..8, k in 1usize..7, seed: u64) {
        prop_assume!(k < per_cell);
        let ds = dataset(speakers, per_cell, 2, &[0.5, -1.0, 2.0]);
        let split = few_shot_split(&ds, k, seed).unwrap();
        prop_assert_eq!(split.support.len(), speakers * 3 * k);
        prop_assert_eq!(split.support.len() + split.test.len(), ds.len());
        let mut ids: Vec<&str> = split.support.iter().chain(&split.test).map(|v| v.utterance_id.as_str()).collect();
        ids.sort();
        ids.dedup();
        prop_assert_eq!(ids.len(), ds.len());
        // same seed, same split
        let again = few_shot_split(&ds, k, seed).unwrap();
        prop_assert_eq!(split.support, again.support);
    }

    #[test]
    fn loso_tests_each_speaker_once(speakers in 2usize..7, per_cell in 1usize..4) {
        let ds = dataset(speakers, per_cell, 1, &[1.0]);
        let folds = loso_folds(&ds).unwrap();
        prop_assert_eq!(folds.len(), speakers);
        for f in &folds {
            prop_assert!(f.test.iter().all(|v| v.speaker_id == f.speaker));
            prop_assert!(f.train.iter().all(|v| v.speaker_id != f.speaker));
            prop_assert_eq!(f.train.len() + f.test.len(), ds.len());
        }
    }

    #[test]
    fn feature_csv_round_trips(values in prop::collection::vec(-1e6f64..1e6, 1..40), dim in 1usize..5) {
        let ds = dataset(2, 2, dim, &values);
        let mut buf = Vec::new();
        write_feature_csv(&mut buf, &ds).unwrap();
        let back = read_feature_csv(Path::new("mem.csv"), "t", buf.as_slice()).unwrap();
        prop_assert_eq!(back.vectors, ds.vectors);
    }

    #[test]
    fn confusion_flat_round_trips(counts in prop::array::uniform9(0u64..50)) {
        let cm = ConfusionMatrix::from_flat(&counts).unwrap();
        prop_assert_eq!(cm.flat(), counts);
        if let Ok(u) = uar(&cm) {
            prop_assert!((0.0..=1.0).contains(&u));
        }
    }

    #[test]
    fn siamese_checkpoint_round_trips(seed: u64, dim in 1usize..6, kappa in 0.0f64..3.0, margin in prop::option::of(0.1f64..10.0)) {
        let cfg = SiameseConfig { kappa, margin, ..SiameseConfig::default() };
        let model = SiameseModel::new(dim, cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let back = model_from_str(&model_to_string(&model)).unwrap();
        prop_assert_eq!(back.flat_params(), model.flat_params());
        prop_assert_eq!(back.config, model.config);
    }

    /// Squaring every distance is strictly increasing, so the argmin is unchanged.
    #[test]
    fn centroid_decision_ignores_monotone_distance_transform(seed: u64, xs in prop::collection::vec(-3.0f64..3.0, 4)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let euclid = SiameseModel::new(4, SiameseConfig::default(), &mut rng).unwrap();
        let mut squared = euclid.clone();
        squared.config.distance = DistanceKind::SquaredEuclidean;
        let ds = dataset(1, 2, 4, &[0.3, -1.2, 2.5, 0.7, -0.4, 1.9, -2.2]);
        let centers = compute_centers(&ds.vectors).unwrap();
        prop_assert_eq!(
            mel_classify(&euclid, &xs, &centers).unwrap(),
            mel_classify(&squared, &xs, &centers).unwrap()
        );
    }
}
