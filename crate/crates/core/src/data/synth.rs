//! Synthetic stand-in for acted (source) and spontaneous (target) corpora.
//!
//! Source utterances are drawn from one Gaussian per emotion plus a small
//! per-speaker offset. Target class means are first turned by
//! `target_class_rotation` radians about their centroid, inside the plane the
//! three means span (emotions expressed differently, same discriminative
//! subspace), so a source-trained classifier misreads them. Target utterances
//! then pass through an affine map: plane rotations by `target_rotation`
//! radians on coordinate pairs (0,1), (2,3), ..., then a translation of length
//! `target_shift`. Class means are pulled towards the origin by
//! `target_separation_scale`, within-class noise is scaled by
//! `target_noise_scale` and each target speaker gets a Gaussian offset.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{Dataset, Domain, Emotion, FeatureVector, NUM_EMOTIONS};
use crate::error::{Error, Result};
use crate::features::FEATURE_DIM;
use crate::kv::KvFile;

#[derive(Debug, Clone, PartialEq)]
pub enum Covariance {
    Isotropic(f64),
    Diagonal(Vec<f64>),
    /// Row-major `dims x dims`.
    Full(Vec<f64>),
}

impl Covariance {
    /// Lower-triangular factor `L` with `L L^T = C`, row-major. Fails when
    /// `C` is not symmetric positive semi-definite.
    fn factor(&self, dims: usize) -> Result<Vec<f64>> {
        let full = match self {
            Covariance::Isotropic(v) => {
                let mut m = vec![0.0; dims * dims];
                (0..dims).for_each(|i| m[i * dims + i] = *v);
                m
            }
            Covariance::Diagonal(d) => {
                if d.len() != dims {
                    return Err(Error::Config(format!(
                        "diagonal covariance has {} entries, dims is {dims}",
                        d.len()
                    )));
                }
                let mut m = vec![0.0; dims * dims];
                d.iter().enumerate().for_each(|(i, v)| m[i * dims + i] = *v);
                m
            }
            Covariance::Full(m) => {
                if m.len() != dims * dims {
                    return Err(Error::Config(format!(
                        "covariance has {} entries, expected {}",
                        m.len(),
                        dims * dims
                    )));
                }
                m.clone()
            }
        };
        cholesky_psd(&full, dims)
    }
}

fn cholesky_psd(c: &[f64], n: usize) -> Result<Vec<f64>> {
    let scale = c.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    let tol = 1e-10 * scale;
    for i in 0..n {
        for j in 0..i {
            if (c[i * n + j] - c[j * n + i]).abs() > tol {
                return Err(Error::Config("covariance is not symmetric".into()));
            }
        }
    }
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = c[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if d < -tol {
            return Err(Error::Config(
                "covariance is not positive semi-definite".into(),
            ));
        }
        let djj = d.max(0.0).sqrt();
        l[j * n + j] = djj;
        for i in j + 1..n {
            let mut s = c[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if djj > 0.0 {
                l[i * n + j] = s / djj;
            } else if s.abs() > tol {
                return Err(Error::Config(
                    "covariance is not positive semi-definite".into(),
                ));
            }
        }
    }
    Ok(l)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub dims: usize,
    pub source_speakers: usize,
    pub target_speakers: usize,
    /// Utterances per speaker per emotion.
    pub source_samples: usize,
    pub target_samples: usize,
    /// Pairwise distance between generated class means (ignored when `means` is set).
    pub class_separation: f64,
    pub means: Option<[Vec<f64>; NUM_EMOTIONS]>,
    pub covariances: [Covariance; NUM_EMOTIONS],
    pub source_speaker_std: f64,
    pub target_speaker_std: f64,
    pub target_shift: f64,
    pub target_rotation: f64,
    pub target_class_rotation: f64,
    pub target_separation_scale: f64,
    pub target_noise_scale: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            dims: FEATURE_DIM,
            source_speakers: 8,
            target_speakers: 6,
            source_samples: 20,
            target_samples: 15,
            class_separation: 4.0,
            means: None,
            covariances: [
                Covariance::Isotropic(1.0),
                Covariance::Isotropic(1.0),
                Covariance::Isotropic(1.0),
            ],
            source_speaker_std: 0.3,
            target_speaker_std: 1.0,
            target_shift: 2.0,
            target_rotation: 0.0,
            target_class_rotation: 1.2,
            target_separation_scale: 1.0,
            target_noise_scale: 1.0,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dims == 0 {
            return Err(Error::Config("dims must be positive".into()));
        }
        if self.source_speakers == 0 || self.source_samples == 0 || self.target_samples == 0 {
            return Err(Error::Config(
                "speaker and sample counts must be positive".into(),
            ));
        }
        if self.target_speakers < 2 {
            return Err(Error::Config("target needs at least 2 speakers".into()));
        }
        for (name, v) in [
            ("class_separation", self.class_separation),
            ("source_speaker_std", self.source_speaker_std),
            ("target_speaker_std", self.target_speaker_std),
            ("target_shift", self.target_shift),
            ("target_separation_scale", self.target_separation_scale),
            ("target_noise_scale", self.target_noise_scale),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("{name} must be finite and >= 0")));
            }
        }
        if !(self.target_rotation.is_finite() && self.target_class_rotation.is_finite()) {
            return Err(Error::Config("rotations must be finite".into()));
        }
        if let Some(means) = &self.means {
            if means.iter().any(|m| m.len() != self.dims) {
                return Err(Error::Config("class means must have `dims` entries".into()));
            }
        }
        Ok(())
    }

    /// Reads a `key = value` file. Recognized keys mirror the field names;
    /// `cov_<emotion>` takes one variance (isotropic) or `dims` comma-separated
    /// variances (diagonal); `mean_<emotion>` takes `dims` comma-separated values.
    pub fn from_kv(mut kv: KvFile) -> Result<Self> {
        let d = Self::default();
        let dims = kv.take_or("dims", d.dims)?;
        let mut cfg = Self {
            dims,
            source_speakers: kv.take_or("source_speakers", d.source_speakers)?,
            target_speakers: kv.take_or("target_speakers", d.target_speakers)?,
            source_samples: kv.take_or("source_samples", d.source_samples)?,
            target_samples: kv.take_or("target_samples", d.target_samples)?,
            class_separation: kv.take_or("class_separation", d.class_separation)?,
            means: None,
            covariances: d.covariances.clone(),
            source_speaker_std: kv.take_or("source_speaker_std", d.source_speaker_std)?,
            target_speaker_std: kv.take_or("target_speaker_std", d.target_speaker_std)?,
            target_shift: kv.take_or("target_shift", d.target_shift)?,
            target_rotation: kv.take_or("target_rotation", d.target_rotation)?,
            target_class_rotation: kv.take_or("target_class_rotation", d.target_class_rotation)?,
            target_separation_scale: kv
                .take_or("target_separation_scale", d.target_separation_scale)?,
            target_noise_scale: kv.take_or("target_noise_scale", d.target_noise_scale)?,
            seed: kv.take_or("seed", d.seed)?,
        };
        let mut means: [Option<Vec<f64>>; NUM_EMOTIONS] = [None, None, None];
        for e in Emotion::ALL {
            if let Some(v) = kv.take_list::<f64>(&format!("cov_{}", e.name()))? {
                cfg.covariances[e.index()] = match v.len() {
                    1 => Covariance::Isotropic(v[0]),
                    _ => Covariance::Diagonal(v),
                };
            }
            means[e.index()] = kv.take_list::<f64>(&format!("mean_{}", e.name()))?;
        }
        match means {
            [Some(a), Some(h), Some(s)] => cfg.means = Some([a, h, s]),
            [None, None, None] => {}
            _ => {
                return Err(Error::Config(
                    "set mean_anger, mean_happiness and mean_sadness together".into(),
                ))
            }
        }
        kv.finish()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_kv(KvFile::load(path)?)
    }
}

fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Class means on mutually orthogonal random directions, pairwise `separation` apart.
fn generated_means(rng: &mut ChaCha8Rng, dims: usize, separation: f64) -> [Vec<f64>; NUM_EMOTIONS] {
    let radius = separation / std::f64::consts::SQRT_2;
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(NUM_EMOTIONS);
    for _ in 0..NUM_EMOTIONS {
        let mut v = gaussian_vec(rng, dims);
        for b in &basis {
            let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        basis.push(v);
    }
    let mut out = basis.into_iter().map(|b| b.into_iter().map(|x| x * radius).collect());
    [out.next().unwrap(), out.next().unwrap(), out.next().unwrap()]
}

fn rotate_planes(x: &mut [f64], angle: f64) {
    if angle == 0.0 {
        return;
    }
    let (s, c) = angle.sin_cos();
    for pair in x.chunks_exact_mut(2) {
        let (a, b) = (pair[0], pair[1]);
        pair[0] = c * a - s * b;
        pair[1] = s * a + c * b;
    }
}

/// Rotates the three means by `angle` about their centroid within their plane.
fn rotate_means(means: &[Vec<f64>; NUM_EMOTIONS], angle: f64) -> Result<[Vec<f64>; NUM_EMOTIONS]> {
    if angle == 0.0 {
        return Ok(means.clone());
    }
    let d = means[0].len();
    let centroid: Vec<f64> = (0..d).map(|i| means.iter().map(|m| m[i]).sum::<f64>() / 3.0).collect();
    let centered: Vec<Vec<f64>> = means
        .iter()
        .map(|m| m.iter().zip(&centroid).map(|(a, c)| a - c).collect())
        .collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let n0 = dot(&centered[0], &centered[0]).sqrt();
    if n0 < 1e-12 {
        return Err(Error::Config("class means coincide; cannot rotate them".into()));
    }
    let u: Vec<f64> = centered[0].iter().map(|x| x / n0).collect();
    let p = dot(&centered[1], &u);
    let mut v: Vec<f64> = centered[1].iter().zip(&u).map(|(x, ui)| x - p * ui).collect();
    let nv = dot(&v, &v).sqrt();
    if nv < 1e-12 * n0 {
        return Err(Error::Config("class means are collinear; cannot rotate them".into()));
    }
    v.iter_mut().for_each(|x| *x /= nv);
    let (s, c) = angle.sin_cos();
    let mut out = means.clone();
    for (o, m) in out.iter_mut().zip(&centered) {
        let (a, b) = (dot(m, &u), dot(m, &v));
        let (ra, rb) = (c * a - s * b, s * a + c * b);
        for i in 0..d {
            // the off-plane residual (zero for three points) is kept as is
            let resid = m[i] - a * u[i] - b * v[i];
            o[i] = centroid[i] + resid + ra * u[i] + rb * v[i];
        }
    }
    Ok(out)
}

fn lower_mul(l: &[f64], z: &[f64]) -> Vec<f64> {
    let n = z.len();
    (0..n)
        .map(|i| (0..=i).map(|k| l[i * n + k] * z[k]).sum())
        .collect()
}

/// Generates `(source, target)` datasets; deterministic in `cfg.seed`.
pub fn synth_generate(cfg: &SyntheticConfig) -> Result<(Dataset, Dataset)> {
    cfg.validate()?;
    let dims = cfg.dims;
    let factors = cfg
        .covariances
        .iter()
        .map(|c| c.factor(dims))
        .collect::<Result<Vec<_>>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let means = match &cfg.means {
        Some(m) => m.clone(),
        None => generated_means(&mut rng, dims, cfg.class_separation),
    };
    let target_means = rotate_means(&means, cfg.target_class_rotation)?;
    let mut shift_dir = gaussian_vec(&mut rng, dims);
    let norm = shift_dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
    shift_dir.iter_mut().for_each(|x| *x *= cfg.target_shift / norm);

    let build = |domain: Domain,
                     speakers: usize,
                     samples: usize,
                     speaker_std: f64,
                     mean_scale: f64,
                     noise_scale: f64,
                     rng: &mut ChaCha8Rng| {
        let tag = match domain {
            Domain::Source => "src",
            Domain::Target => "tgt",
        };
        let mut vectors = Vec::with_capacity(speakers * samples * NUM_EMOTIONS);
        for s in 0..speakers {
            let speaker_id = format!("{tag}_spk{:02}", s + 1);
            let offset: Vec<f64> = gaussian_vec(rng, dims)
                .into_iter()
                .map(|x| x * speaker_std)
                .collect();
            for e in Emotion::ALL {
                for i in 0..samples {
                    let noise = lower_mul(&factors[e.index()], &gaussian_vec(rng, dims));
                    let class_means = match domain {
                        Domain::Source => &means,
                        Domain::Target => &target_means,
                    };
                    let mut x: Vec<f64> = class_means[e.index()]
                        .iter()
                        .zip(&noise)
                        .map(|(m, n)| m * mean_scale + n * noise_scale)
                        .collect();
                    if domain == Domain::Target {
                        rotate_planes(&mut x, cfg.target_rotation);
                        x.iter_mut().zip(&shift_dir).for_each(|(v, d)| *v += d);
                    }
                    x.iter_mut().zip(&offset).for_each(|(v, o)| *v += o);
                    vectors.push(FeatureVector {
                        utterance_id: format!("{speaker_id}_{}_{:03}", e.name(), i + 1),
                        speaker_id: speaker_id.clone(),
                        emotion: e,
                        domain,
                        values: x,
                    });
                }
            }
        }
        vectors
    };

    let source = build(
        Domain::Source,
        cfg.source_speakers,
        cfg.source_samples,
        cfg.source_speaker_std,
        1.0,
        1.0,
        &mut rng,
    );
    let target = build(
        Domain::Target,
        cfg.target_speakers,
        cfg.target_samples,
        cfg.target_speaker_std,
        cfg.target_separation_scale,
        cfg.target_noise_scale,
        &mut rng,
    );
    Ok((
        Dataset::new("synthetic_source", Domain::Source, source)?,
        Dataset::new("synthetic_target", Domain::Target, target)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn class_mean(ds: &Dataset, e: Emotion) -> Vec<f64> {
        let rows: Vec<&FeatureVector> = ds.vectors.iter().filter(|v| v.emotion == e).collect();
        let mut m = vec![0.0; ds.dim()];
        for r in &rows {
            m.iter_mut().zip(&r.values).for_each(|(a, b)| *a += b);
        }
        m.iter_mut().for_each(|a| *a /= rows.len() as f64);
        m
    }

    #[test]
    fn null_shift_keeps_class_means() {
        let cfg = SyntheticConfig {
            dims: 8,
            source_speakers: 4,
            target_speakers: 4,
            source_samples: 50,
            target_samples: 50,
            source_speaker_std: 0.0,
            target_speaker_std: 0.0,
            target_shift: 0.0,
            target_rotation: 0.0,
            target_class_rotation: 0.0,
            seed: 9,
            ..SyntheticConfig::default()
        };
        let (src, tgt) = synth_generate(&cfg).unwrap();
        let n = 200.0f64;
        // difference of two independent means: std sqrt(2/n)
        let bound = 4.0 * (2.0 / n).sqrt();
        for e in Emotion::ALL {
            let a = class_mean(&src, e);
            let b = class_mean(&tgt, e);
            for d in 0..8 {
                assert!((a[d] - b[d]).abs() < bound, "{e} dim {d}");
            }
        }
    }

    #[test]
    fn empirical_means_match_config() {
        let means = [vec![5.0, 0.0, 0.0], vec![0.0, 5.0, 0.0], vec![0.0, 0.0, -5.0]];
        let cfg = SyntheticConfig {
            dims: 3,
            source_speakers: 5,
            source_samples: 40,
            source_speaker_std: 0.0,
            means: Some(means.clone()),
            ..SyntheticConfig::default()
        };
        let (src, _) = synth_generate(&cfg).unwrap();
        let bound = 4.0 / (200.0f64).sqrt();
        for e in Emotion::ALL {
            let m = class_mean(&src, e);
            for d in 0..3 {
                assert!((m[d] - means[e.index()][d]).abs() < bound);
            }
        }
    }

    #[test]
    fn generated_means_are_separated() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = generated_means(&mut rng, 64, 10.0);
        for i in 0..3 {
            for j in i + 1..3 {
                let d: f64 = m[i].iter().zip(&m[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                assert!((d - 10.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let cfg = SyntheticConfig {
            dims: 6,
            seed: 42,
            ..SyntheticConfig::default()
        };
        assert_eq!(synth_generate(&cfg).unwrap(), synth_generate(&cfg).unwrap());
        let other = SyntheticConfig { seed: 43, ..cfg.clone() };
        assert_ne!(synth_generate(&cfg).unwrap().0, synth_generate(&other).unwrap().0);
    }

    #[test]
    fn non_psd_covariance_is_config_error() {
        let mut cfg = SyntheticConfig {
            dims: 2,
            ..SyntheticConfig::default()
        };
        cfg.covariances[1] = Covariance::Full(vec![1.0, 2.0, 2.0, 1.0]);
        assert_eq!(synth_generate(&cfg).unwrap_err().category(), "config");
        cfg.covariances[1] = Covariance::Diagonal(vec![1.0, -0.1]);
        assert_eq!(synth_generate(&cfg).unwrap_err().category(), "config");
        cfg.covariances[1] = Covariance::Full(vec![1.0, 1.0, 1.0, 1.0]);
        assert!(synth_generate(&cfg).is_ok());
    }

    #[test]
    fn single_target_speaker_rejected() {
        let cfg = SyntheticConfig {
            target_speakers: 1,
            ..SyntheticConfig::default()
        };
        assert!(synth_generate(&cfg).is_err());
    }

    #[test]
    fn kv_config() {
        let kv = KvFile::parse(
            Path::new("c.txt"),
            "dims = 2\nseed = 5\ncov_anger = 0.5, 2\nmean_anger = 1,0\nmean_happiness = 0,1\nmean_sadness = -1,0\n",
        )
        .unwrap();
        let cfg = SyntheticConfig::from_kv(kv).unwrap();
        assert_eq!(cfg.dims, 2);
        assert_eq!(cfg.covariances[0], Covariance::Diagonal(vec![0.5, 2.0]));
        assert!(cfg.means.is_some());
        let bad = KvFile::parse(Path::new("c.txt"), "dimz = 2\n").unwrap();
        assert!(SyntheticConfig::from_kv(bad).is_err());
    }

    #[test]
    fn third_turn_permutes_class_means() {
        let means = [vec![3.0, 0.0, 0.0, 1.0], vec![0.0, 3.0, 0.0, 1.0], vec![0.0, 0.0, 3.0, 1.0]];
        let turned = rotate_means(&means, 2.0 * std::f64::consts::PI / 3.0).unwrap();
        for t in &turned {
            let hit = means
                .iter()
                .any(|m| m.iter().zip(t).all(|(a, b)| (a - b).abs() < 1e-12));
            assert!(hit, "{t:?} is not a permuted mean");
        }
        assert_ne!(turned[0], means[0]);
        let collinear = [vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]];
        assert!(rotate_means(&collinear, 0.5).is_err());
    }
}
