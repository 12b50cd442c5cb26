//! The demo operations, run natively.

use emoshot_web::{few_shot_json, pi_dynamics_json, pitch_track_json};

#[test]
fn pi_dynamics_probabilities_move_apart() {
    let v = pi_dynamics_json(0.1, 25, [2.0, 0.0, 0.5]).unwrap();
    let series = v["series"].as_array().unwrap();
    let prob = |i: usize| -> Vec<f64> {
        series[i]["prob"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
    };
    let (a, b) = (prob(0), prob(1));
    assert_eq!(a.len(), 26);
    assert!(a.windows(2).all(|w| w[1] > w[0]));
    assert!(b.windows(2).all(|w| w[1] < w[0]));
    assert!((series[0]["pi"].as_f64().unwrap() - 6.0).abs() < 1e-12);
    for t in 0..26 {
        let total: f64 = (0..3).map(|i| prob(i)[t]).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
    assert!(pi_dynamics_json(0.1, 5, [3.0, 0.0, 0.0]).is_err());
}

#[test]
fn pitch_track_follows_a_steady_tone() {
    let v = pitch_track_json(220.0, 0.0, 0.0, 0.5).unwrap();
    let f0: Vec<f64> = v["f0"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(f0.len(), (8000 - 400) / 160 + 1);
    assert!(f0.iter().all(|f| (f - 220.0).abs() < 0.05 * 220.0), "{f0:?}");
}

#[test]
fn pitch_track_follows_vibrato() {
    let v = pitch_track_json(200.0, 3.0, 30.0, 1.0).unwrap();
    let get = |k: &str| -> Vec<f64> { v[k].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect() };
    let (f0, truth) = (get("f0"), get("truth"));
    let close = f0.iter().zip(&truth).filter(|(f, t)| (*f - *t).abs() < 0.05 * *t).count();
    assert!(close * 10 >= f0.len() * 9, "{close} of {} frames within 5%", f0.len());
}

#[test]
fn few_shot_returns_scores_and_points() {
    let v = few_shot_json(3, 7, 1.2).unwrap();
    let mels = v["uar_mel_s"].as_f64().unwrap();
    let ood = v["uar_out_of_domain"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&mels) && (0.0..=1.0).contains(&ood));
    let points = v["points"].as_array().unwrap();
    // 3 speakers x 3 emotions x (12 - 3) test utterances
    assert_eq!(points.len(), 81);
    assert!(points.iter().all(|p| p["x"].as_f64().unwrap().is_finite()));
    assert!(few_shot_json(0, 1, 0.0).is_err());
}
