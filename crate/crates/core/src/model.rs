//! Trees, forests and the per-sample log-prior accumulated during training.

use crate::error::{Error, Result};
use crate::loss::softmax_in_place;
use crate::scalar::Scalar;

/// Deepest tree the container and the trainer accept.
pub const MAX_DEPTH: usize = 30;

/// One internal node of a complete binary tree.
///
/// An active node sends `x` right when `x[feature] >= threshold` and left
/// otherwise. An inactive node (`feature == None`) sends everything left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionNode<T> {
    pub feature: Option<usize>,
    pub threshold: T,
}

impl<T: Scalar> DecisionNode<T> {
    pub fn split(feature: usize, threshold: T) -> Self {
        DecisionNode { feature: Some(feature), threshold }
    }

    pub fn inactive() -> Self {
        DecisionNode { feature: None, threshold: T::zero() }
    }

    pub fn is_active(&self) -> bool {
        self.feature.is_some()
    }

    /// `true` when `x` goes to the right child.
    #[inline]
    pub fn goes_right(&self, x: &[T]) -> bool {
        match self.feature {
            Some(f) => !(x[f] < self.threshold),
            None => false,
        }
    }
}

/// Combination rule of a forest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// Leaves hold log residual likelihoods; trees combine by normalized product.
    Rlf,
    /// Leaves hold log class distributions; trees combine by averaging.
    Rf,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Rlf => "rlf",
            ModelKind::Rf => "rf",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rlf" => Ok(ModelKind::Rlf),
            "rf" => Ok(ModelKind::Rf),
            other => Err(Error::validation(format!("unknown method '{other}', expected rlf or rf"))),
        }
    }
}

/// Complete binary tree of depth `D`: `2^D - 1` nodes in breadth-first order
/// and a `2^D x num_classes` matrix of natural-log leaf values.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeModel<T> {
    depth: usize,
    num_classes: usize,
    nodes: Vec<DecisionNode<T>>,
    leaf_values: Vec<T>,
}

impl<T: Scalar> TreeModel<T> {
    pub fn new(depth: usize, num_classes: usize, nodes: Vec<DecisionNode<T>>, leaf_values: Vec<T>) -> Result<Self> {
        if depth == 0 || depth > MAX_DEPTH {
            return Err(Error::validation(format!("tree depth {depth} outside [1, {MAX_DEPTH}]")));
        }
        if num_classes < 2 {
            return Err(Error::validation("trees need at least 2 classes"));
        }
        let leaves = 1usize << depth;
        if nodes.len() != leaves - 1 {
            return Err(Error::validation(format!(
                "depth {depth} tree needs {} nodes, got {}",
                leaves - 1,
                nodes.len()
            )));
        }
        if leaf_values.len() != leaves * num_classes {
            return Err(Error::validation(format!(
                "depth {depth} tree needs {} leaf values, got {}",
                leaves * num_classes,
                leaf_values.len()
            )));
        }
        if nodes.iter().any(|n| n.is_active() && !n.threshold.is_finite()) {
            return Err(Error::validation("active node with non-finite threshold"));
        }
        if leaf_values.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("non-finite leaf value"));
        }
        Ok(TreeModel { depth, num_classes, nodes, leaf_values })
    }

    /// Depth-`depth` tree with every node inactive and every leaf zero.
    pub fn neutral(depth: usize, num_classes: usize) -> Result<Self> {
        let leaves = 1usize.checked_shl(depth as u32).unwrap_or(0);
        Self::new(
            depth,
            num_classes,
            vec![DecisionNode::inactive(); leaves.saturating_sub(1)],
            vec![T::zero(); leaves * num_classes],
        )
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_leaves(&self) -> usize {
        1 << self.depth
    }

    pub fn nodes(&self) -> &[DecisionNode<T>] {
        &self.nodes
    }

    /// Flat `num_leaves x num_classes` leaf matrix.
    pub fn leaf_values(&self) -> &[T] {
        &self.leaf_values
    }

    #[inline]
    pub fn leaf(&self, leaf: usize) -> &[T] {
        &self.leaf_values[leaf * self.num_classes..(leaf + 1) * self.num_classes]
    }

    pub fn leaf_mut(&mut self, leaf: usize) -> &mut [T] {
        &mut self.leaf_values[leaf * self.num_classes..(leaf + 1) * self.num_classes]
    }

    /// Highest feature index any active node reads, if any.
    pub fn max_feature(&self) -> Option<usize> {
        self.nodes.iter().filter_map(|n| n.feature).max()
    }

    /// Leaf reached by `x`. The caller guarantees `x` is long enough.
    #[inline]
    pub fn route_unchecked(&self, x: &[T]) -> usize {
        let mut i = 0;
        for _ in 0..self.depth {
            i = 2 * i + 1 + usize::from(self.nodes[i].goes_right(x));
        }
        i - self.nodes.len()
    }
}

/// An ordered list of trees sharing the class count and feature dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel<T> {
    kind: ModelKind,
    num_classes: usize,
    feature_dim: usize,
    trees: Vec<TreeModel<T>>,
}

impl<T: Scalar> ForestModel<T> {
    pub fn new(kind: ModelKind, num_classes: usize, feature_dim: usize) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::validation("forests need at least 2 classes"));
        }
        if feature_dim == 0 {
            return Err(Error::validation("forests need at least 1 feature"));
        }
        Ok(ForestModel { kind, num_classes, feature_dim, trees: Vec::new() })
    }

    /// Appends a tree after checking it matches the forest's shape.
    ///
    /// For `ModelKind::Rf` every leaf row must exponentiate to a distribution.
    pub fn push(&mut self, tree: TreeModel<T>) -> Result<()> {
        if tree.num_classes() != self.num_classes {
            return Err(Error::validation(format!(
                "tree has {} classes, forest has {}",
                tree.num_classes(),
                self.num_classes
            )));
        }
        if let Some(f) = tree.max_feature() {
            if f >= self.feature_dim {
                return Err(Error::validation(format!(
                    "tree splits on feature {f}, forest has {} features",
                    self.feature_dim
                )));
            }
        }
        if self.kind == ModelKind::Rf {
            let tol = T::lit(1e-9).max(T::epsilon() * T::count(4 * self.num_classes));
            for leaf in 0..tree.num_leaves() {
                let total: T = tree.leaf(leaf).iter().map(|v| v.exp()).sum();
                if (total - T::one()).abs() > tol {
                    return Err(Error::validation(format!("random forest leaf {leaf} sums to {total}, not 1")));
                }
            }
        }
        self.trees.push(tree);
        Ok(())
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn trees(&self) -> &[TreeModel<T>] {
        &self.trees
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    /// Number of leaves storing something other than the neutral value:
    /// zeros for RLF, the uniform distribution for RF.
    pub fn non_neutral_leaves(&self) -> usize {
        let uniform = -T::count(self.num_classes).ln();
        let neutral = match self.kind {
            ModelKind::Rlf => T::zero(),
            ModelKind::Rf => uniform,
        };
        self.trees
            .iter()
            .map(|t| (0..t.num_leaves()).filter(|&l| t.leaf(l).iter().any(|&v| v != neutral)).count())
            .sum()
    }
}

/// Per-sample log-prior over classes, the running sum of every trained
/// tree's log-residual at the leaf the sample reaches.
///
/// Rows are defined up to an additive constant; [`PriorState::posterior`]
/// is the observable.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorState<T> {
    num_classes: usize,
    log_prior: Vec<T>,
}

impl<T: Scalar> PriorState<T> {
    /// All-zero state: the uniform prior of an empty ensemble.
    pub fn uniform(num_samples: usize, num_classes: usize) -> Self {
        PriorState { num_classes, log_prior: vec![T::zero(); num_samples * num_classes] }
    }

    /// Wraps an explicit row-major `N x num_classes` log-prior matrix.
    pub fn from_log_prior(log_prior: Vec<T>, num_classes: usize) -> Result<Self> {
        if num_classes < 2 || !log_prior.len().is_multiple_of(num_classes) {
            return Err(Error::validation(format!(
                "log-prior of length {} is not a matrix with {num_classes} columns",
                log_prior.len()
            )));
        }
        if log_prior.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("non-finite log-prior entry"));
        }
        Ok(PriorState { num_classes, log_prior })
    }

    pub fn num_samples(&self) -> usize {
        self.log_prior.len() / self.num_classes
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn log_prior(&self) -> &[T] {
        &self.log_prior
    }

    pub(crate) fn log_prior_mut(&mut self) -> &mut [T] {
        &mut self.log_prior
    }

    #[inline]
    pub fn row(&self, n: usize) -> &[T] {
        &self.log_prior[n * self.num_classes..(n + 1) * self.num_classes]
    }

    /// Normalized class distribution of sample `n`.
    pub fn posterior(&self, n: usize) -> Vec<T> {
        let mut p = self.row(n).to_vec();
        softmax_in_place(&mut p);
        p
    }

    /// Row-major `N x num_classes` matrix of normalized posteriors.
    pub fn posteriors(&self) -> Vec<T> {
        let mut p = self.log_prior.clone();
        for row in p.chunks_exact_mut(self.num_classes) {
            softmax_in_place(row);
        }
        p
    }
}
