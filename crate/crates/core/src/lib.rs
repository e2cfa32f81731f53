//! Gradient-free classification over fused deep-feature tables.
//!
//! The pipeline has four stages, each in its own module:
//!
//! - [`feature_io`]: load labeled CSV feature tables, concatenate two tables
//!   sample-by-sample, z-score normalize, and split stratified by class.
//! - [`nn`]: MLP topologies whose parameters live in one flat vector, plus a
//!   single conv + ReLU + pool reference layer.
//! - [`woa`]: a box-bounded Whale Optimization Algorithm minimizer.
//! - [`trainer`]: binds the optimizer to the MLP (MSE fitness over the flat
//!   parameter vector), predicts, and (de)serializes models.
//!
//! [`metrics`] turns predictions into a binary confusion matrix and the seven
//! usual summary scores (accuracy, sensitivity, specificity, precision, F1,
//! MCC, Cohen's kappa). [`cli`] wires everything behind the `woamlp` binary.

pub mod cli;
pub mod feature_io;
pub mod metrics;
pub mod nn;
pub mod trainer;
pub mod woa;

mod error;

pub use error::{Error, ErrorKind, Result};
pub use feature_io::{FeatureTable, Normalizer};
pub use metrics::{ConfusionMatrix, MetricsReport};
pub use nn::{Activation, MlpTopology, ParamVector};
pub use trainer::{TrainConfig, TrainedModel};
pub use woa::{Bounds, WoaConfig, WoaState};
