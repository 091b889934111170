//! Joint dimensionality reduction, continuous super-resolution, and
//! cross-altitude prediction for gridded wind fields, with classical
//! compression baselines and an evaluation harness.

pub mod autograd;
pub mod baseline;
pub mod codec;
pub mod error;
pub mod field;
pub mod layers;
pub mod liif;
pub mod metrics;
pub mod model;
pub mod resample;
pub mod synth;

pub use error::{CoreError, Result};
pub use field::{Component, DatasetSplit, FieldPair, FieldStack, ModalityPairBatch, NormStats, WindField};
