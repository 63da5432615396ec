//! Hyperparameters shared by the residual forest trainer and the baseline.

use crate::error::{Error, Result};
use crate::model::MAX_DEPTH;

/// Number of features sampled per node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeaturePool {
    /// `ceil(sqrt(d))`.
    Auto,
    Fixed(usize),
}

impl FeaturePool {
    /// Pool size for `feature_dim` features, capped at `feature_dim`.
    pub fn size(self, feature_dim: usize) -> usize {
        let k = match self {
            FeaturePool::Auto => ceil_sqrt(feature_dim),
            FeaturePool::Fixed(k) => k,
        };
        k.min(feature_dim)
    }
}

fn ceil_sqrt(n: usize) -> usize {
    let mut r = (n as f64).sqrt() as usize;
    while r * r < n {
        r += 1;
    }
    while r > 0 && (r - 1) * (r - 1) >= n {
        r -= 1;
    }
    r
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub num_trees: usize,
    pub max_depth: usize,
    pub feature_pool: FeaturePool,
    pub thresholds_per_feature: usize,
    /// Fixed-point updates per leaf residual.
    pub residual_iterations: usize,
    /// Floor applied to residuals (and nothing else) before taking logs.
    pub epsilon: f64,
    pub seed: u64,
    /// Bootstrap resampling per tree. `None` picks the method default:
    /// on for the random forest, off for the residual forest.
    pub bagging: Option<bool>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            num_trees: 100,
            max_depth: 15,
            feature_pool: FeaturePool::Auto,
            thresholds_per_feature: 10,
            residual_iterations: 1,
            epsilon: 1e-6,
            seed: 0,
            bagging: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_trees == 0 {
            return Err(Error::validation("num_trees must be at least 1"));
        }
        if self.max_depth == 0 || self.max_depth > MAX_DEPTH {
            return Err(Error::validation(format!("max_depth must be in [1, {MAX_DEPTH}]")));
        }
        if self.feature_pool == FeaturePool::Fixed(0) {
            return Err(Error::validation("feature pool must be at least 1"));
        }
        if self.thresholds_per_feature == 0 {
            return Err(Error::validation("thresholds_per_feature must be at least 1"));
        }
        if self.residual_iterations == 0 {
            return Err(Error::validation("residual_iterations must be at least 1"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::validation(format!("epsilon must be in (0, 1), got {}", self.epsilon)));
        }
        Ok(())
    }

    pub fn with_trees(mut self, n: usize) -> Self {
        self.num_trees = n;
        self
    }

    pub fn with_depth(mut self, d: usize) -> Self {
        self.max_depth = d;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_residual_iterations(mut self, n: usize) -> Self {
        self.residual_iterations = n;
        self
    }

    pub fn with_bagging(mut self, on: bool) -> Self {
        self.bagging = Some(on);
        self
    }
}
