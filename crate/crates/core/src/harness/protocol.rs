//! Trial planning, leakage audit and execution of every protocol.

use std::collections::{HashMap, HashSet};

use log::info;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::fnn::{fnn_finetune, fnn_new, fnn_predict, last_hidden, train_classifier};
use super::metrics::{uar, ConfusionMatrix};
use super::pca::{pca_export, PcaRow};
use super::spec::{DataSpec, ExperimentSpec, Hyper, Method};
use crate::aspf::{train_mels_aspf, PairFormationPolicy, PairFormer, PiHistory};
use crate::data::{few_shot_split, load_feature_csv, loso_folds, synth_generate, Dataset, Emotion, FeatureVector};
use crate::error::{Error, Result};
use crate::metric::{
    argmax_emotion, compute_centers, embed, mels_predict, train_mel, train_mels, SiameseModel,
};
use crate::nn::DenseNet;

/// Source and target datasets, each standardized on its own statistics.
#[derive(Debug, Clone)]
pub struct ExperimentData {
    pub sources: Vec<Dataset>,
    pub target: Dataset,
}

impl ExperimentData {
    pub fn new(sources: Vec<Dataset>, target: Dataset) -> Result<Self> {
        let sources = sources
            .iter()
            .map(|s| s.standardized().map(|(d, _)| d))
            .collect::<Result<Vec<_>>>()?;
        let (target, _) = target.standardized()?;
        if let Some(s) = sources.iter().find(|s| s.dim() != target.dim()) {
            return Err(Error::Shape(format!(
                "source `{}` has {} features, target `{}` has {}",
                s.name,
                s.dim(),
                target.name,
                target.dim()
            )));
        }
        Ok(Self { sources, target })
    }

    pub fn load(spec: &DataSpec) -> Result<Self> {
        match spec {
            DataSpec::Synthetic(cfg) => {
                let (s, t) = synth_generate(cfg)?;
                Self::new(vec![s], t)
            }
            DataSpec::Csv { sources, target } => {
                let sources = sources
                    .iter()
                    .map(|p| load_feature_csv(p))
                    .collect::<Result<Vec<_>>>()?;
                Self::new(sources, load_feature_csv(target)?)
            }
        }
    }
}

/// SplitMix64 finalizer over the base seed and a tag sequence.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    let mut z = seed;
    for &t in tags.iter().chain(std::iter::once(&0x5eed)) {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15 ^ t.wrapping_mul(0xbf58_476d_1ce4_e5b9));
        let mut x = z;
        x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z = x ^ (x >> 31);
    }
    z
}

/// One train/evaluate unit. `train` holds target-domain training samples
/// (LOSO training fold or few-shot support); source data come on top for
/// every method except in-domain.
#[derive(Debug, Clone)]
pub struct TrialPlan {
    pub method: Method,
    pub source: Option<usize>,
    /// Shots per cell; 0 for in/out-of-domain.
    pub k: usize,
    pub repetition: usize,
    pub seed: u64,
    pub train: Vec<FeatureVector>,
    pub test: Vec<FeatureVector>,
}

pub fn plan_trials(spec: &ExperimentSpec, data: &ExperimentData) -> Result<Vec<TrialPlan>> {
    spec.validate()?;
    let mut plans = Vec::new();
    for (mi, &method) in spec.methods.iter().enumerate() {
        let mi = mi as u64;
        match method {
            Method::InDomain => {
                for (f, fold) in loso_folds(&data.target)?.into_iter().enumerate() {
                    plans.push(TrialPlan {
                        method,
                        source: None,
                        k: 0,
                        repetition: f,
                        seed: derive_seed(spec.seed, &[mi, f as u64]),
                        train: fold.train,
                        test: fold.test,
                    });
                }
            }
            Method::OutOfDomain => {
                for s in 0..data.sources.len() {
                    plans.push(TrialPlan {
                        method,
                        source: Some(s),
                        k: 0,
                        repetition: 0,
                        seed: derive_seed(spec.seed, &[mi, s as u64]),
                        train: Vec::new(),
                        test: data.target.vectors.clone(),
                    });
                }
            }
            _ => {
                for s in 0..data.sources.len() {
                    for &k in &spec.shots {
                        for r in 0..spec.repetitions {
                            // the split depends on (k, r) only, so all methods see the same supports
                            let split = few_shot_split(&data.target, k, derive_seed(spec.seed, &[k as u64, r as u64]))?;
                            plans.push(TrialPlan {
                                method,
                                source: Some(s),
                                k,
                                repetition: r,
                                seed: derive_seed(spec.seed, &[mi, s as u64, k as u64, r as u64]),
                                train: split.support,
                                test: split.test,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(plans)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AuditSummary {
    pub trials: usize,
    pub checked_ids: usize,
}

/// Verifies that no test id reaches any training phase, that few-shot
/// support and test partition the target, and that LOSO tests every target
/// id exactly once with speaker-disjoint folds.
pub fn audit_plans(plans: &[TrialPlan], data: &ExperimentData) -> Result<AuditSummary> {
    let source_ids: Vec<HashSet<&str>> = data
        .sources
        .iter()
        .map(|s| s.utterance_ids().collect())
        .collect();
    let target_ids: HashSet<&str> = data.target.utterance_ids().collect();
    let mut loso_seen: HashMap<&str, usize> = HashMap::new();
    let mut summary = AuditSummary::default();
    for p in plans {
        let label = format!("{} k={} rep={}", p.method, p.k, p.repetition);
        let train: HashSet<&str> = p.train.iter().map(|v| v.utterance_id.as_str()).collect();
        for v in &p.test {
            let id = v.utterance_id.as_str();
            if train.contains(id) {
                return Err(Error::Protocol(format!("{label}: test id `{id}` also in training")));
            }
            if let Some(s) = p.source {
                if source_ids[s].contains(id) {
                    return Err(Error::Protocol(format!("{label}: test id `{id}` is in the source data")));
                }
            }
            summary.checked_ids += 1;
        }
        match p.method {
            Method::InDomain => {
                let speakers: HashSet<&str> = p.test.iter().map(|v| v.speaker_id.as_str()).collect();
                if speakers.len() != 1 || p.train.iter().any(|v| speakers.contains(v.speaker_id.as_str())) {
                    return Err(Error::Protocol(format!("{label}: fold is not speaker-disjoint")));
                }
                for v in &p.test {
                    *loso_seen.entry(v.utterance_id.as_str()).or_default() += 1;
                }
            }
            Method::OutOfDomain => {}
            _ => {
                if p.train.len() + p.test.len() != target_ids.len()
                    || p.train.iter().chain(&p.test).any(|v| !target_ids.contains(v.utterance_id.as_str()))
                {
                    return Err(Error::Protocol(format!("{label}: support and test do not partition the target")));
                }
            }
        }
        summary.trials += 1;
    }
    if plans.iter().any(|p| p.method == Method::InDomain) {
        let once = target_ids.iter().all(|id| loso_seen.get(id) == Some(&1));
        if !once || loso_seen.len() != target_ids.len() {
            return Err(Error::Protocol("LOSO folds do not test every target id exactly once".into()));
        }
    }
    Ok(summary)
}

#[derive(Debug, Clone)]
pub struct TrialResult {
    pub method: Method,
    pub source: String,
    pub k: usize,
    pub repetition: usize,
    pub seed: u64,
    pub confusion: ConfusionMatrix,
    pub uar: f64,
    pub pca: Option<Vec<PcaRow>>,
    pub pi_history: Option<PiHistory>,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub trials: Vec<TrialResult>,
}

/// Models trained once on each source and shared by all trials.
struct Pretrained {
    fnn: Vec<Option<DenseNet>>,
    snn: Vec<Option<SiameseModel>>,
}

fn pretrain(spec: &ExperimentSpec, data: &ExperimentData) -> Result<Pretrained> {
    let need_fnn = spec
        .methods
        .iter()
        .any(|m| matches!(m, Method::OutOfDomain | Method::FnnFinetune));
    let need_snn = spec.methods.iter().any(|m| m.is_siamese());
    let h = &spec.hyper;
    let per_source = data
        .sources
        .par_iter()
        .enumerate()
        .map(|(s, src)| -> Result<(Option<DenseNet>, Option<SiameseModel>)> {
            let fnn = if need_fnn {
                info!("pre-training classifier on `{}`", src.name);
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, &[100, s as u64]));
                let mut net = fnn_new(src.dim(), &mut rng)?;
                train_classifier(&mut net, &src.vectors, &h.pretrain, &mut rng)?;
                Some(net)
            } else {
                None
            };
            let snn = if need_snn {
                info!("pre-training siamese trunk on `{}`", src.name);
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, &[200, s as u64]));
                Some(pretrain_siamese(&src.vectors, h, &mut rng)?)
            } else {
                None
            };
            Ok((fnn, snn))
        })
        .collect::<Result<Vec<_>>>()?;
    let (fnn, snn) = per_source.into_iter().unzip();
    Ok(Pretrained { fnn, snn })
}

/// Pair-objective training on source data, speakers ignored, uniform pairing.
pub fn pretrain_siamese(samples: &[FeatureVector], h: &Hyper, rng: &mut ChaCha8Rng) -> Result<SiameseModel> {
    let dim = samples
        .first()
        .map(|v| v.values.len())
        .ok_or_else(|| Error::Usage("no source samples".into()))?;
    let mut model = SiameseModel::new(dim, h.siamese, rng)?;
    let former = PairFormer::new(
        samples,
        PairFormationPolicy {
            speaker_scoped: false,
            max_retries: h.aspf.policy.max_retries,
        },
    )?;
    let ones = vec![1.0; samples.len()];
    let count = h.source_pairs_per_epoch.unwrap_or(samples.len());
    train_mel(&mut model, samples, &mut former.stream(&ones, count), &h.pretrain, rng)?;
    Ok(model)
}

fn target_former(support: &[FeatureVector], h: &Hyper) -> Result<PairFormer> {
    PairFormer::new(support, h.aspf.policy)
}

fn evaluate<F>(test: &[FeatureVector], mut predict: F) -> Result<ConfusionMatrix>
where
    F: FnMut(&[f64]) -> Result<Emotion>,
{
    let mut cm = ConfusionMatrix::new();
    for v in test {
        cm.add(v.emotion, predict(&v.values)?);
    }
    Ok(cm)
}

fn pca_rows<F>(test: &[FeatureVector], mut act: F) -> Result<Vec<PcaRow>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let rows = test
        .iter()
        .map(|v| Ok((v.utterance_id.clone(), v.emotion, act(&v.values)?)))
        .collect::<Result<Vec<_>>>()?;
    pca_export(&rows)
}

fn head_hidden(model: &SiameseModel, x: &[f64]) -> Result<Vec<f64>> {
    let head = model
        .head
        .as_ref()
        .ok_or_else(|| Error::Usage("model has no emotion head".into()))?;
    last_hidden(head, &embed(model, x)?)
}

fn run_trial(
    plan: &TrialPlan,
    spec: &ExperimentSpec,
    data: &ExperimentData,
    pre: &Pretrained,
    want_pca: bool,
) -> Result<TrialResult> {
    let h = &spec.hyper;
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let mut pca = None;
    let mut pi_history = None;
    let fnn_source = |s: usize| pre.fnn[s].as_ref().expect("classifier pre-trained");
    let snn_source = |s: usize| pre.snn[s].as_ref().expect("siamese model pre-trained");
    let confusion = match (plan.method, plan.source) {
        (Method::InDomain, _) => {
            let mut net = fnn_new(data.target.dim(), &mut rng)?;
            train_classifier(&mut net, &plan.train, &h.pretrain, &mut rng)?;
            if want_pca {
                pca = Some(pca_rows(&plan.test, |x| last_hidden(&net, x))?);
            }
            evaluate(&plan.test, |x| fnn_predict(&net, x))?
        }
        (Method::OutOfDomain, Some(s)) => {
            let net = fnn_source(s);
            if want_pca {
                pca = Some(pca_rows(&plan.test, |x| last_hidden(net, x))?);
            }
            evaluate(&plan.test, |x| fnn_predict(net, x))?
        }
        (Method::FnnFinetune, Some(s)) => {
            let net = fnn_finetune(fnn_source(s), &plan.train, &h.finetune, &mut rng)?;
            if want_pca {
                pca = Some(pca_rows(&plan.test, |x| last_hidden(&net, x))?);
            }
            evaluate(&plan.test, |x| fnn_predict(&net, x))?
        }
        (Method::Mel, Some(s)) => {
            let mut model = snn_source(s).clone();
            let former = target_former(&plan.train, h)?;
            let ones = vec![1.0; plan.train.len()];
            let count = h.aspf.pairs_per_epoch.unwrap_or(plan.train.len());
            train_mel(&mut model, &plan.train, &mut former.stream(&ones, count), &h.finetune, &mut rng)?;
            let centers = compute_centers(&plan.train)?.embedded(&model)?;
            if want_pca {
                pca = Some(pca_rows(&plan.test, |x| embed(&model, x))?);
            }
            evaluate(&plan.test, |x| centers.classify(&model, x))?
        }
        (Method::MelS, Some(s)) => {
            let mut model = snn_source(s).clone();
            let former = target_former(&plan.train, h)?;
            let ones = vec![1.0; plan.train.len()];
            let count = h.aspf.pairs_per_epoch.unwrap_or(plan.train.len());
            train_mels(&mut model, &plan.train, &mut former.stream(&ones, count), &h.finetune, &mut rng)?;
            if want_pca {
                pca = Some(pca_rows(&plan.test, |x| head_hidden(&model, x))?);
            }
            evaluate(&plan.test, |x| Ok(argmax_emotion(&mels_predict(&model, x)?)))?
        }
        (Method::MelSAspf, Some(s)) => {
            let mut model = snn_source(s).clone();
            let out = train_mels_aspf(&mut model, &plan.train, &h.aspf, &h.finetune, &mut rng)?;
            if plan.repetition == 0 {
                pi_history = Some(out.history);
            }
            if want_pca {
                pca = Some(pca_rows(&plan.test, |x| head_hidden(&model, x))?);
            }
            evaluate(&plan.test, |x| Ok(argmax_emotion(&mels_predict(&model, x)?)))?
        }
        (m, None) => return Err(Error::Usage(format!("method `{m}` needs a source dataset"))),
    };
    Ok(TrialResult {
        method: plan.method,
        source: plan
            .source
            .map_or_else(|| "-".to_string(), |s| data.sources[s].name.clone()),
        k: plan.k,
        repetition: plan.repetition,
        seed: plan.seed,
        uar: uar(&confusion)?,
        confusion,
        pca,
        pi_history,
    })
}

/// Plans, audits and runs every trial of `spec` on already loaded data.
pub fn run_on_data(spec: &ExperimentSpec, data: &ExperimentData) -> Result<ExperimentReport> {
    let plans = plan_trials(spec, data)?;
    let audit = audit_plans(&plans, data)?;
    info!("{} trials planned; audit checked {} test ids", audit.trials, audit.checked_ids);
    let pre = pretrain(spec, data)?;
    let max_k = spec.shots.iter().copied().max().unwrap_or(0);
    let trials = plans
        .par_iter()
        .map(|p| {
            let want_pca = spec.pca && p.repetition == 0 && (p.k == 0 || p.k == max_k);
            run_trial(p, spec, data, &pre, want_pca)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentReport { trials })
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    let data = ExperimentData::load(&spec.data)?;
    run_on_data(spec, &data)
}

fn only(spec: &ExperimentSpec, methods: &[Method]) -> Result<ExperimentSpec> {
    let mut s = spec.clone();
    s.methods = methods.to_vec();
    s.validate()?;
    Ok(s)
}

/// Leave-one-speaker-out FNN on the target alone.
pub fn run_in_domain(spec: &ExperimentSpec, data: &ExperimentData) -> Result<ExperimentReport> {
    run_on_data(&only(spec, &[Method::InDomain])?, data)
}

/// Source-trained FNN evaluated on the whole target.
pub fn run_out_of_domain(spec: &ExperimentSpec, data: &ExperimentData) -> Result<ExperimentReport> {
    run_on_data(&only(spec, &[Method::OutOfDomain])?, data)
}

/// Every few-shot method of `spec` over its k range and repetitions.
pub fn run_few_shot(spec: &ExperimentSpec, data: &ExperimentData) -> Result<ExperimentReport> {
    let methods: Vec<Method> = spec.methods.iter().copied().filter(|m| m.is_few_shot()).collect();
    if methods.is_empty() {
        return Err(Error::Config("no few-shot method in spec".into()));
    }
    run_on_data(&only(spec, &methods)?, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_differ() {
        let a = derive_seed(1, &[0, 1]);
        assert_ne!(a, derive_seed(1, &[1, 0]));
        assert_ne!(a, derive_seed(2, &[0, 1]));
        assert_eq!(a, derive_seed(1, &[0, 1]));
    }
}
