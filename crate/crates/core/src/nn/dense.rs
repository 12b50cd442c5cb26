//! Fully-connected networks with explicit forward caches and reverse-mode
//! gradients.
//!
//! Each layer computes `a = act(W x + b)` with `W` stored row-major as
//! `(out_dim, in_dim)`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Uniform};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Rectifier,
    Sigmoid,
    Identity,
}

/// Largest f64 strictly below one; sigmoid outputs are clamped to stay inside (0, 1).
const SIGMOID_CEIL: f64 = 1.0 - f64::EPSILON / 2.0;

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Rectifier => z.max(0.0),
            Activation::Sigmoid => sigmoid(z),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    #[inline]
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Rectifier => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Identity => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Rectifier => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Identity => "identity",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" | "rectifier" => Ok(Activation::Rectifier),
            "sigmoid" => Ok(Activation::Sigmoid),
            "identity" | "linear" => Ok(Activation::Identity),
            other => Err(Error::Schema(format!("unknown activation `{other}`"))),
        }
    }
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    let s = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    s.clamp(f64::MIN_POSITIVE, SIGMOID_CEIL)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSpec {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        Self {
            in_dim,
            out_dim,
            activation,
        }
    }
}

/// Builds the layer list for a chain of widths, e.g. `[64, 32, 16]` gives two layers.
/// `hidden` applies to every layer except the last, which uses `last`.
pub fn chain(widths: &[usize], hidden: Activation, last: Activation) -> Vec<LayerSpec> {
    let n = widths.len().saturating_sub(1);
    (0..n)
        .map(|i| {
            let act = if i + 1 == n { last } else { hidden };
            LayerSpec::new(widths[i], widths[i + 1], act)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    spec: LayerSpec,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl Layer {
    pub fn spec(&self) -> LayerSpec {
        self.spec
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub(crate) fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub(crate) fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    fn affine(&self, x: &[f64], z: &mut [f64]) {
        let n_in = self.spec.in_dim;
        for (o, zo) in z.iter_mut().enumerate() {
            let row = &self.weights[o * n_in..(o + 1) * n_in];
            *zo = self.bias[o] + row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>();
        }
    }
}

/// A stack of dense layers whose dimensions chain.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    layers: Vec<Layer>,
}

/// Per-layer inputs, pre-activations and outputs recorded by [`DenseNet::forward`].
#[derive(Debug, Clone, Default)]
pub struct ForwardCache {
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.post.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn pre_activations(&self) -> &[Vec<f64>] {
        &self.pre
    }

    pub fn activations(&self) -> &[Vec<f64>] {
        &self.post
    }

    pub fn is_empty(&self) -> bool {
        self.post.is_empty()
    }
}

fn validate_specs(specs: &[LayerSpec]) -> Result<()> {
    if specs.is_empty() {
        return Err(Error::Shape("network needs at least one layer".into()));
    }
    for (i, s) in specs.iter().enumerate() {
        if s.in_dim == 0 || s.out_dim == 0 {
            return Err(Error::Shape(format!("layer {i} has a zero dimension")));
        }
    }
    for (i, pair) in specs.windows(2).enumerate() {
        if pair[0].out_dim != pair[1].in_dim {
            return Err(Error::Shape(format!(
                "layer {i} outputs {} but layer {} expects {}",
                pair[0].out_dim,
                i + 1,
                pair[1].in_dim
            )));
        }
    }
    Ok(())
}

impl DenseNet {
    /// Glorot-uniform weights, zero biases.
    pub fn new<R: Rng + ?Sized>(specs: &[LayerSpec], rng: &mut R) -> Result<Self> {
        validate_specs(specs)?;
        let layers = specs
            .iter()
            .map(|&spec| {
                let limit = (6.0 / (spec.in_dim + spec.out_dim) as f64).sqrt();
                let dist = Uniform::new_inclusive(-limit, limit).expect("finite limit");
                Layer {
                    spec,
                    weights: (0..spec.in_dim * spec.out_dim)
                        .map(|_| dist.sample(rng))
                        .collect(),
                    bias: vec![0.0; spec.out_dim],
                }
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn zeros(specs: &[LayerSpec]) -> Result<Self> {
        validate_specs(specs)?;
        Ok(Self {
            layers: specs
                .iter()
                .map(|&spec| Layer {
                    spec,
                    weights: vec![0.0; spec.in_dim * spec.out_dim],
                    bias: vec![0.0; spec.out_dim],
                })
                .collect(),
        })
    }

    /// Assembles a network from explicit `(spec, row-major weights, bias)` triples.
    pub fn from_parts(parts: Vec<(LayerSpec, Vec<f64>, Vec<f64>)>) -> Result<Self> {
        let specs: Vec<LayerSpec> = parts.iter().map(|p| p.0).collect();
        validate_specs(&specs)?;
        let mut layers = Vec::with_capacity(parts.len());
        for (i, (spec, weights, bias)) in parts.into_iter().enumerate() {
            if weights.len() != spec.in_dim * spec.out_dim || bias.len() != spec.out_dim {
                return Err(Error::Shape(format!(
                    "layer {i}: expected {}x{} weights and {} biases, got {} and {}",
                    spec.out_dim,
                    spec.in_dim,
                    spec.out_dim,
                    weights.len(),
                    bias.len()
                )));
            }
            layers.push(Layer {
                spec,
                weights,
                bias,
            });
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| l.spec).collect()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].spec.in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].spec.out_dim
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// All parameters, layer by layer, weights before biases.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_flat_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::Shape(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                params.len()
            )));
        }
        let mut offset = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&params[offset..offset + nw]);
            offset += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&params[offset..offset + nb]);
            offset += nb;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.bias).all(|v| v.is_finite()))
    }

    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
        if x.len() != self.input_dim() {
            return Err(Error::Shape(format!(
                "input has {} values, network expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        let mut cache = ForwardCache {
            inputs: Vec::with_capacity(self.layers.len()),
            pre: Vec::with_capacity(self.layers.len()),
            post: Vec::with_capacity(self.layers.len()),
        };
        let mut current = x.to_vec();
        for layer in &self.layers {
            let mut z = vec![0.0; layer.spec.out_dim];
            layer.affine(&current, &mut z);
            let a: Vec<f64> = z.iter().map(|&v| layer.spec.activation.apply(v)).collect();
            cache.inputs.push(std::mem::replace(&mut current, a.clone()));
            cache.pre.push(z);
            cache.post.push(a);
        }
        Ok((current, cache))
    }

    /// Forward pass without keeping the cache.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.forward(x).map(|(out, _)| out)
    }

    /// Activations of every layer except the output one; the last entry is
    /// the final hidden representation.
    pub fn hidden_activations(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        let (_, mut cache) = self.forward(x)?;
        cache.post.pop();
        Ok(cache.post)
    }

    pub fn backward(&self, cache: &ForwardCache, loss_grad: &[f64]) -> Result<Gradients> {
        let mut grads = Gradients::zeros_like(self);
        self.backward_into(cache, loss_grad, &mut grads)?;
        Ok(grads)
    }

    /// Accumulates parameter gradients into `grads` and returns the gradient
    /// with respect to the network input.
    pub fn backward_into(
        &self,
        cache: &ForwardCache,
        loss_grad: &[f64],
        grads: &mut Gradients,
    ) -> Result<Vec<f64>> {
        if cache.is_empty() {
            return Err(Error::Usage("backward called without a forward cache".into()));
        }
        if cache.pre.len() != self.layers.len()
            || cache
                .pre
                .iter()
                .zip(&self.layers)
                .any(|(z, l)| z.len() != l.spec.out_dim)
        {
            return Err(Error::Usage(
                "forward cache was produced by a different network".into(),
            ));
        }
        if !grads.is_congruent(self) {
            return Err(Error::Shape("gradient buffer does not match network".into()));
        }
        if loss_grad.len() != self.output_dim() {
            return Err(Error::Shape(format!(
                "loss gradient has {} values, network outputs {}",
                loss_grad.len(),
                self.output_dim()
            )));
        }

        let mut upstream = loss_grad.to_vec();
        for (idx, layer) in self.layers.iter().enumerate().rev() {
            let act = layer.spec.activation;
            let n_in = layer.spec.in_dim;
            let z = &cache.pre[idx];
            let a = &cache.post[idx];
            let input = &cache.inputs[idx];
            let delta: Vec<f64> = upstream
                .iter()
                .zip(z.iter().zip(a))
                .map(|(g, (&zv, &av))| g * act.derivative(zv, av))
                .collect();

            let lg = &mut grads.layers[idx];
            let mut down = vec![0.0; n_in];
            for (o, &d) in delta.iter().enumerate() {
                lg.bias[o] += d;
                if d == 0.0 {
                    continue;
                }
                let row = &layer.weights[o * n_in..(o + 1) * n_in];
                let grow = &mut lg.weights[o * n_in..(o + 1) * n_in];
                for i in 0..n_in {
                    grow[i] += d * input[i];
                    down[i] += d * row[i];
                }
            }
            upstream = down;
        }
        Ok(upstream)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Parameter gradients shaped like the owning [`DenseNet`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
}

impl Gradients {
    pub fn zeros_like(net: &DenseNet) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGrad {
                    weights: vec![0.0; l.weights.len()],
                    bias: vec![0.0; l.bias.len()],
                })
                .collect(),
        }
    }

    pub fn is_congruent(&self, net: &DenseNet) -> bool {
        self.layers.len() == net.layers.len()
            && self.layers.iter().zip(&net.layers).all(|(g, l)| {
                g.weights.len() == l.weights.len() && g.bias.len() == l.bias.len()
            })
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weights.iter_mut().zip(&b.weights).for_each(|(x, y)| *x += y);
            a.bias.iter_mut().zip(&b.bias).for_each(|(x, y)| *x += y);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for g in &mut self.layers {
            g.weights.iter_mut().for_each(|x| *x *= factor);
            g.bias.iter_mut().for_each(|x| *x *= factor);
        }
    }

    /// Index of the first layer holding a non-finite entry.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.layers
            .iter()
            .position(|g| g.weights.iter().chain(&g.bias).any(|v| !v.is_finite()))
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for g in &self.layers {
            out.extend_from_slice(&g.weights);
            out.extend_from_slice(&g.bias);
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.layers
            .iter()
            .all(|g| g.weights.iter().chain(&g.bias).all(|&v| v == 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_net_outputs_half_per_sigmoid_node() {
        let net = DenseNet::zeros(&chain(&[5, 4, 3], Activation::Rectifier, Activation::Sigmoid))
            .unwrap();
        let out = net.predict(&[1.0, -2.0, 3.0, 0.5, 9.0]).unwrap();
        assert_eq!(out, vec![0.5; 3]);
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let spec = LayerSpec::new(2, 2, Activation::Identity);
        let net = DenseNet::from_parts(vec![(spec, vec![1.0, 0.0, 0.0, 1.0], vec![0.0; 2])])
            .unwrap();
        assert_eq!(net.predict(&[1.0, 2.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn single_sigmoid_unit() {
        let spec = LayerSpec::new(1, 1, Activation::Sigmoid);
        let net = DenseNet::from_parts(vec![(spec, vec![1.0], vec![0.0])]).unwrap();
        let out = net.predict(&[0.2]).unwrap();
        assert!((out[0] - 0.549834).abs() < 1e-6);
    }

    #[test]
    fn forward_rejects_wrong_input_len() {
        let net = DenseNet::zeros(&[LayerSpec::new(3, 1, Activation::Identity)]).unwrap();
        assert!(matches!(net.predict(&[1.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn mismatched_chain_is_rejected() {
        let specs = [
            LayerSpec::new(3, 4, Activation::Rectifier),
            LayerSpec::new(5, 1, Activation::Identity),
        ];
        assert!(matches!(DenseNet::zeros(&specs), Err(Error::Shape(_))));
        assert!(DenseNet::zeros(&[LayerSpec::new(0, 1, Activation::Identity)]).is_err());
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = DenseNet::new(&chain(&[4, 6, 2], Activation::Rectifier, Activation::Sigmoid), &mut rng)
            .unwrap();
        let (_, cache) = net.forward(&[0.3, -0.1, 0.7, 1.2]).unwrap();
        let g = net.backward(&cache, &[0.0, 0.0]).unwrap();
        assert!(g.is_zero());
    }

    #[test]
    fn linear_unit_square_loss_gradient() {
        // L = 0.5 (w x - y)^2 at x = 2, w = 1, y = 0 -> dL/dw = (wx - y) x = 4
        let spec = LayerSpec::new(1, 1, Activation::Identity);
        let net = DenseNet::from_parts(vec![(spec, vec![1.0], vec![0.0])]).unwrap();
        let (out, cache) = net.forward(&[2.0]).unwrap();
        let g = net.backward(&cache, &[out[0] - 0.0]).unwrap();
        assert_eq!(g.layers[0].weights[0], 4.0);
    }

    #[test]
    fn backward_without_cache_is_usage_error() {
        let net = DenseNet::zeros(&[LayerSpec::new(2, 1, Activation::Identity)]).unwrap();
        let err = net.backward(&ForwardCache::default(), &[1.0]).unwrap_err();
        assert_eq!(err.category(), "usage");

        let other = DenseNet::zeros(&chain(&[2, 3, 1], Activation::Rectifier, Activation::Identity))
            .unwrap();
        let (_, foreign) = other.forward(&[1.0, 1.0]).unwrap();
        assert_eq!(net.backward(&foreign, &[1.0]).unwrap_err().category(), "usage");
    }

    #[test]
    fn output_ranges_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let net = DenseNet::new(&chain(&[3, 8, 8, 4], Activation::Rectifier, Activation::Sigmoid), &mut rng)
            .unwrap();
        for x in [[100.0, -50.0, 3.0], [-1e3, 1e3, 0.0], [0.0, 0.0, 0.0]] {
            let (out, cache) = net.forward(&x).unwrap();
            assert!(out.iter().all(|&v| v > 0.0 && v < 1.0));
            for hidden in &cache.activations()[..2] {
                assert!(hidden.iter().all(|&v| v >= 0.0));
            }
        }
        assert!(sigmoid(800.0) < 1.0 && sigmoid(-800.0) > 0.0);
    }

    #[test]
    fn flat_params_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut net = DenseNet::new(&chain(&[3, 2, 1], Activation::Rectifier, Activation::Identity), &mut rng)
            .unwrap();
        let p = net.flat_params();
        assert_eq!(p.len(), net.param_count());
        let mut q = p.clone();
        q[0] += 1.0;
        net.set_flat_params(&q).unwrap();
        assert_eq!(net.layers()[0].weights()[0], p[0] + 1.0);
    }
}
