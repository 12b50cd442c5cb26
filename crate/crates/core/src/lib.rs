//! Few-shot transfer of speech emotion classifiers from acted to
//! spontaneous speech using siamese metric learning.

pub mod error;
pub mod aspf;
pub mod data;
pub mod features;
pub mod harness;
pub mod kv;
pub mod metric;
pub mod nn;

pub use error::{Error, Result};
