//! WebAssembly bindings for the demo page in `www/`. Every export returns a
//! JSON string; the `*_json` functions hold the logic and run natively too.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use emoshot::aspf::{aspf_sweep, selection_prob, LikelihoodTable};
use emoshot::data::{Domain, Emotion, FeatureVector, SyntheticConfig};
use emoshot::features::{frame_signal, AudioClip, FrameConfig, LldExtractor};
use emoshot::harness::{
    run_on_data, summarize, trial_rows, DataSpec, ExperimentData, ExperimentSpec, Method,
};
use emoshot::metric::SnnObjective;
use emoshot::{Error, Result};

const SAMPLE_RATE: u32 = 16_000;

fn to_js(r: Result<Value>) -> std::result::Result<String, JsValue> {
    r.map(|v| v.to_string())
        .map_err(|e| JsValue::from_str(&format!("error[{}]: {}", e.category(), e.message())))
}

/// Selection probabilities of three pool-mates whose predictions carry a
/// constant l1 error each (0 = always right, 2 = confidently wrong).
pub fn pi_dynamics_json(lambda: f64, iterations: usize, errors: [f64; 3]) -> Result<Value> {
    if errors.iter().any(|e| !(0.0..=2.0).contains(e)) {
        return Err(Error::Usage("l1 errors of one-hot targets lie in [0, 2]".into()));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Usage("lambda must be finite and >= 0".into()));
    }
    let ids = ["A", "B", "C"];
    let samples: Vec<FeatureVector> = ids
        .iter()
        .map(|id| FeatureVector {
            utterance_id: id.to_string(),
            speaker_id: "spk".into(),
            emotion: Emotion::Anger,
            domain: Domain::Target,
            values: vec![0.0],
        })
        .collect();
    let mut table = LikelihoodTable::for_samples(&samples, lambda)?;
    // a prediction that puts err/2 of its mass on a wrong class has l1 error `err`
    let preds: Vec<[f64; 3]> = errors.iter().map(|e| [1.0 - e / 2.0, e / 2.0, 0.0]).collect();
    let mut probs = vec![selection_prob(&table, &ids)?];
    for _ in 0..iterations {
        let mut i = 0;
        aspf_sweep(&mut table, &samples, |_| {
            i += 1;
            Ok(preds[i - 1])
        })?;
        probs.push(selection_prob(&table, &ids)?);
    }
    let series: Vec<Value> = ids
        .iter()
        .enumerate()
        .map(|(j, id)| {
            json!({
                "label": format!("{id} (error {})", errors[j]),
                "prob": probs.iter().map(|p| p[j]).collect::<Vec<_>>(),
                "pi": 1.0 + lambda * errors[j] * iterations as f64,
            })
        })
        .collect();
    Ok(json!({ "iterations": iterations, "series": series }))
}

/// Frame-wise F0 of a tone with sinusoidal vibrato, against the true pitch.
pub fn pitch_track_json(base_hz: f64, vibrato_hz: f64, depth_hz: f64, seconds: f64) -> Result<Value> {
    if !(base_hz > 0.0 && depth_hz >= 0.0 && seconds > 0.0 && seconds <= 5.0) {
        return Err(Error::Usage("need base > 0, depth >= 0 and 0 < seconds <= 5".into()));
    }
    let sr = SAMPLE_RATE as f64;
    let n = (seconds * sr) as usize;
    let two_pi = 2.0 * std::f64::consts::PI;
    let truth_at = |t: f64| base_hz + depth_hz * (two_pi * vibrato_hz * t).sin();
    let mut phase = 0.0;
    let samples: Vec<f64> = (0..n)
        .map(|i| {
            phase += two_pi * truth_at(i as f64 / sr) / sr;
            0.5 * phase.sin()
        })
        .collect();
    let clip = AudioClip::new(samples, SAMPLE_RATE)?;
    let cfg = FrameConfig::default();
    let extractor = LldExtractor::new(SAMPLE_RATE, cfg.frame_len(SAMPLE_RATE));
    let step = cfg.step_len(SAMPLE_RATE) as f64 / sr;
    let half = cfg.frame_len(SAMPLE_RATE) as f64 / sr / 2.0;
    let (mut time, mut f0, mut truth, mut voicing) = (vec![], vec![], vec![], vec![]);
    for (i, frame) in frame_signal(&clip, &cfg)?.iter().enumerate() {
        let lld = extractor.extract(frame);
        let t = i as f64 * step + half;
        time.push(t);
        f0.push(lld.f0());
        truth.push(truth_at(t));
        voicing.push(lld.voicing());
    }
    Ok(json!({ "time": time, "f0": f0, "truth": truth, "voicing": voicing }))
}

/// A small transfer run: out-of-domain classifier vs MeL-S with `k` shots,
/// plus a 2-D PCA of the MeL-S head activations on the target test set.
pub fn few_shot_json(k: usize, seed: u64, class_rotation: f64) -> Result<Value> {
    let cfg = SyntheticConfig {
        source_speakers: 4,
        target_speakers: 3,
        source_samples: 12,
        target_samples: 12,
        target_class_rotation: class_rotation,
        seed,
        ..SyntheticConfig::default()
    };
    let mut spec = ExperimentSpec::new(vec![Method::OutOfDomain, Method::MelS], DataSpec::Synthetic(cfg));
    spec.shots = vec![k];
    spec.repetitions = 1;
    spec.seed = seed;
    spec.pca = true;
    spec.hyper.pretrain.epochs = 150;
    spec.hyper.finetune.epochs = 150;
    spec.hyper.siamese.objective = SnnObjective::Distance;
    spec.validate()?;
    let data = ExperimentData::load(&spec.data)?;
    let report = run_on_data(&spec, &data)?;
    let summary = summarize(&trial_rows(&report))?;
    let uar_of = |m: Method| summary.iter().find(|s| s.method == m).map(|s| s.mean_uar);
    let points: Vec<Value> = report
        .trials
        .iter()
        .find(|t| t.method == Method::MelS)
        .and_then(|t| t.pca.as_ref())
        .map(|rows| {
            rows.iter()
                .map(|r| json!({ "id": r.utterance_id, "emotion": r.emotion.name(), "x": r.pc[0], "y": r.pc[1] }))
                .collect()
        })
        .unwrap_or_default();
    Ok(json!({
        "k": k,
        "uar_out_of_domain": uar_of(Method::OutOfDomain),
        "uar_mel_s": uar_of(Method::MelS),
        "points": points,
    }))
}

#[wasm_bindgen]
pub fn pi_dynamics(lambda: f64, iterations: usize, err_a: f64, err_b: f64, err_c: f64) -> std::result::Result<String, JsValue> {
    to_js(pi_dynamics_json(lambda, iterations, [err_a, err_b, err_c]))
}

#[wasm_bindgen]
pub fn pitch_track(base_hz: f64, vibrato_hz: f64, depth_hz: f64, seconds: f64) -> std::result::Result<String, JsValue> {
    to_js(pitch_track_json(base_hz, vibrato_hz, depth_hz, seconds))
}

#[wasm_bindgen]
pub fn few_shot(k: usize, seed: u32, class_rotation: f64) -> std::result::Result<String, JsValue> {
    to_js(few_shot_json(k, seed as u64, class_rotation))
}
