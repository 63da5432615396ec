//! Residual likelihood forests.
//!
//! An ensemble of decision trees whose leaves store per-class *residual
//! likelihoods*. Trees are grown one at a time against the posterior of the
//! trees already in the ensemble, choosing splits and leaf values that
//! minimize the global cross-entropy loss. Predictions combine trees by a
//! normalized product (a sum of log-residuals followed by one log-sum-exp).
//!
//! A conventional Gini/bagging random forest is included as a baseline, along
//! with dataset loaders, a binary model container and an experiment harness.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! at the crate root fix the scalar to `f64`, which is what the CLI uses.

pub mod config;
pub mod dataset;
pub mod error;
pub mod harness;
pub mod io;
pub mod loss;
pub mod model;
pub mod predict;
pub mod residual;
pub mod rf;
pub mod rng;
pub mod scalar;
pub mod split;
pub mod synthetic;
pub mod train;

pub use config::{FeaturePool, TrainConfig};
pub use dataset::{Dataset, LabelMap};
pub use error::{Error, Result};
pub use loss::{cross_entropy_loss, normalize_posterior};
pub use model::{DecisionNode, ForestModel, ModelKind, PriorState, TreeModel};
pub use scalar::Scalar;

/// Double-precision dataset.
pub type Dataset64 = Dataset<f64>;
/// Single-precision dataset.
pub type Dataset32 = Dataset<f32>;
/// Double-precision forest; the scalar used by the model container and CLI.
pub type Forest = ForestModel<f64>;
/// Single-precision forest.
pub type Forest32 = ForestModel<f32>;
/// Double-precision tree.
pub type Tree = TreeModel<f64>;
/// Single-precision tree.
pub type Tree32 = TreeModel<f32>;
/// Double-precision training state.
pub type Priors = PriorState<f64>;
