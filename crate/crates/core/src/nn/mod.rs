//! Minimal dense-network engine: forward/backward passes, Adam and losses.

mod adam;
pub mod checkpoint;
mod dense;
pub mod loss;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use dense::{
    chain, sigmoid, Activation, DenseNet, ForwardCache, Gradients, Layer, LayerGrad, LayerSpec,
};
pub use loss::{binary_cross_entropy, cross_entropy};
