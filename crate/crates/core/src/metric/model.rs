use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::data::NUM_EMOTIONS;
use crate::error::{Error, Result};
use crate::nn::{chain, Activation, DenseNet, Gradients};

pub const EMBEDDING_DIM: usize = 16;
pub const TRUNK_WIDTHS: [usize; 3] = [32, 16, EMBEDDING_DIM];
pub const HEAD_HIDDEN: usize = 8;
pub const DEFAULT_MARGIN: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceKind {
    Euclidean,
    SquaredEuclidean,
}

impl DistanceKind {
    pub fn eval(self, a: &[f64], b: &[f64]) -> f64 {
        let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        match self {
            DistanceKind::Euclidean => sq.sqrt(),
            DistanceKind::SquaredEuclidean => sq,
        }
    }

    /// Distance and its gradient with respect to `a` (the gradient w.r.t. `b`
    /// is the negation). At `a == b` the Euclidean subgradient 0 is used.
    pub fn eval_grad(self, a: &[f64], b: &[f64]) -> (f64, Vec<f64>) {
        let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        let sq: f64 = diff.iter().map(|d| d * d).sum();
        match self {
            DistanceKind::Euclidean => {
                let d = sq.sqrt();
                let g = if d > 0.0 {
                    diff.iter().map(|x| x / d).collect()
                } else {
                    vec![0.0; diff.len()]
                };
                (d, g)
            }
            DistanceKind::SquaredEuclidean => (sq, diff.iter().map(|x| 2.0 * x).collect()),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DistanceKind::Euclidean => "euclidean",
            DistanceKind::SquaredEuclidean => "squared_euclidean",
        }
    }
}

impl fmt::Display for DistanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DistanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(DistanceKind::Euclidean),
            "squared_euclidean" | "sqeuclidean" => Ok(DistanceKind::SquaredEuclidean),
            other => Err(Error::Config(format!("unknown distance `{other}`"))),
        }
    }
}

/// Which loss trains the siamese trunk on pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnnObjective {
    /// Same-class distances minus `kappa` times (margin-clamped) different-class distances.
    Distance,
    /// Binary cross-entropy of a sigmoid unit over `|f(x_i) - f(x_j)|`.
    Verification,
}

impl SnnObjective {
    pub fn name(self) -> &'static str {
        match self {
            SnnObjective::Distance => "distance",
            SnnObjective::Verification => "verification",
        }
    }
}

impl fmt::Display for SnnObjective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SnnObjective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "distance" => Ok(SnnObjective::Distance),
            "verification" => Ok(SnnObjective::Verification),
            other => Err(Error::Config(format!("unknown objective `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiameseConfig {
    pub kappa: f64,
    /// Clamp on different-class distances; `None` leaves them unbounded.
    pub margin: Option<f64>,
    pub distance: DistanceKind,
    pub objective: SnnObjective,
}

impl Default for SiameseConfig {
    fn default() -> Self {
        Self {
            kappa: 1.0,
            margin: Some(DEFAULT_MARGIN),
            distance: DistanceKind::Euclidean,
            objective: SnnObjective::Verification,
        }
    }
}

/// Shared trunk `f_W`, optional verification unit and optional emotion head `g_V`.
///
/// Both siamese streams run through the single `trunk` value, so weights are
/// shared by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SiameseModel {
    pub trunk: DenseNet,
    pub verification_head: Option<DenseNet>,
    pub head: Option<DenseNet>,
    pub config: SiameseConfig,
}

impl SiameseModel {
    /// Trunk `input -> 32 -> 16 -> 16` (rectifier), a single sigmoid
    /// verification unit, and the `16 -> 8 -> 3` emotion head.
    pub fn new<R: Rng + ?Sized>(input_dim: usize, config: SiameseConfig, rng: &mut R) -> Result<Self> {
        let mut widths = vec![input_dim];
        widths.extend_from_slice(&TRUNK_WIDTHS);
        let trunk = DenseNet::new(&chain(&widths, Activation::Rectifier, Activation::Rectifier), rng)?;
        let verification_head = DenseNet::new(
            &chain(&[EMBEDDING_DIM, 1], Activation::Sigmoid, Activation::Sigmoid),
            rng,
        )?;
        let head = DenseNet::new(
            &chain(
                &[EMBEDDING_DIM, HEAD_HIDDEN, NUM_EMOTIONS],
                Activation::Rectifier,
                Activation::Sigmoid,
            ),
            rng,
        )?;
        Self::from_parts(trunk, Some(verification_head), Some(head), config)
    }

    pub fn from_parts(
        trunk: DenseNet,
        verification_head: Option<DenseNet>,
        head: Option<DenseNet>,
        config: SiameseConfig,
    ) -> Result<Self> {
        if trunk.output_dim() != EMBEDDING_DIM {
            return Err(Error::Shape(format!(
                "trunk must output {EMBEDDING_DIM} values, got {}",
                trunk.output_dim()
            )));
        }
        if let Some(v) = &verification_head {
            if v.input_dim() != EMBEDDING_DIM || v.output_dim() != 1 {
                return Err(Error::Shape("verification head must map 16 -> 1".into()));
            }
        }
        if let Some(h) = &head {
            if h.input_dim() != EMBEDDING_DIM || h.output_dim() != NUM_EMOTIONS {
                return Err(Error::Shape("emotion head must map 16 -> 3".into()));
            }
        }
        if !(config.kappa >= 0.0 && config.kappa.is_finite()) {
            return Err(Error::Config("kappa must be finite and >= 0".into()));
        }
        if let Some(m) = config.margin {
            if !(m > 0.0) {
                return Err(Error::Config("margin must be positive".into()));
            }
        }
        Ok(Self {
            trunk,
            verification_head,
            head,
            config,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.trunk.input_dim()
    }

    pub fn is_finite(&self) -> bool {
        self.trunk.is_finite()
            && self.verification_head.as_ref().map_or(true, DenseNet::is_finite)
            && self.head.as_ref().map_or(true, DenseNet::is_finite)
    }
}

/// Trunk forward pass.
pub fn embed(model: &SiameseModel, x: &[f64]) -> Result<Vec<f64>> {
    model.trunk.predict(x)
}

pub fn pair_distance(model: &SiameseModel, a: &[f64], b: &[f64]) -> Result<f64> {
    let ea = embed(model, a)?;
    let eb = embed(model, b)?;
    Ok(model.config.distance.eval(&ea, &eb))
}

/// Gradients for every network in a [`SiameseModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct SiameseGrads {
    pub trunk: Gradients,
    pub verification_head: Option<Gradients>,
    pub head: Option<Gradients>,
}

impl SiameseGrads {
    pub fn zeros_like(model: &SiameseModel) -> Self {
        Self {
            trunk: Gradients::zeros_like(&model.trunk),
            verification_head: model.verification_head.as_ref().map(Gradients::zeros_like),
            head: model.head.as_ref().map(Gradients::zeros_like),
        }
    }

    pub fn add_scaled(&mut self, other: &SiameseGrads, factor: f64) {
        let mut o = other.clone();
        o.trunk.scale(factor);
        self.trunk.add_assign(&o.trunk);
        if let (Some(a), Some(mut b)) = (self.verification_head.as_mut(), o.verification_head) {
            b.scale(factor);
            a.add_assign(&b);
        }
        if let (Some(a), Some(mut b)) = (self.head.as_mut(), o.head) {
            b.scale(factor);
            a.add_assign(&b);
        }
    }

    /// Trunk, then verification head, then emotion head.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = self.trunk.to_flat();
        if let Some(g) = &self.verification_head {
            out.extend(g.to_flat());
        }
        if let Some(g) = &self.head {
            out.extend(g.to_flat());
        }
        out
    }
}

impl SiameseModel {
    /// Parameters in the same order as [`SiameseGrads::to_flat`].
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = self.trunk.flat_params();
        if let Some(n) = &self.verification_head {
            out.extend(n.flat_params());
        }
        if let Some(n) = &self.head {
            out.extend(n.flat_params());
        }
        out
    }

    pub fn set_flat_params(&mut self, params: &[f64]) -> Result<()> {
        let mut offset = 0;
        let mut take = |net: &mut DenseNet| -> Result<()> {
            let n = net.param_count();
            let slice = params
                .get(offset..offset + n)
                .ok_or_else(|| Error::Shape("too few parameters".into()))?;
            net.set_flat_params(slice)?;
            offset += n;
            Ok(())
        };
        take(&mut self.trunk)?;
        if let Some(n) = self.verification_head.as_mut() {
            take(n)?;
        }
        if let Some(n) = self.head.as_mut() {
            take(n)?;
        }
        if offset != params.len() {
            return Err(Error::Shape("too many parameters".into()));
        }
        Ok(())
    }
}
