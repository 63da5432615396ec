//! Random split candidates and the per-node sample partitions they act on.
//!
//! Both forest kinds grow trees level by level over a complete binary tree.
//! The node with breadth-first index `i` has children `2i + 1` and `2i + 2`;
//! level `m` holds nodes `2^m - 1 .. 2^(m+1) - 1`.

use std::cmp::Ordering;

use rand::distr::Open01;
use rand::Rng;
use rayon::prelude::*;

use crate::config::TrainConfig;
use crate::dataset::Dataset;
use crate::model::DecisionNode;
use crate::rng::node_stream;
use crate::scalar::Scalar;

/// A `(feature, threshold)` test drawn for one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate<T> {
    pub feature: usize,
    pub threshold: T,
    /// `false` when the feature is constant over the node or the drawn
    /// threshold would leave a child empty.
    pub valid: bool,
}

impl<T: Scalar> SplitCandidate<T> {
    /// Lexicographic `(feature, threshold)` order used to break loss ties.
    pub fn lex_cmp(&self, other: &Self) -> Ordering {
        self.feature
            .cmp(&other.feature)
            .then_with(|| self.threshold.partial_cmp(&other.threshold).unwrap_or(Ordering::Equal))
    }

    pub fn node(&self) -> DecisionNode<T> {
        DecisionNode::split(self.feature, self.threshold)
    }
}

/// Training rows routed to one node. Repeated rows (bootstrap) are allowed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodePartition {
    pub node_id: usize,
    pub sample_ids: Vec<usize>,
}

impl NodePartition {
    pub fn root(sample_ids: Vec<usize>) -> Self {
        NodePartition { node_id: 0, sample_ids }
    }

    pub fn is_empty(&self) -> bool {
        self.sample_ids.is_empty()
    }

    pub fn len(&self) -> usize {
        self.sample_ids.len()
    }

    /// Children of this node after applying `node`. An inactive node sends
    /// every sample to the left child.
    pub fn split<T: Scalar>(&self, node: &DecisionNode<T>, dataset: &Dataset<T>) -> (NodePartition, NodePartition) {
        let (right, left): (Vec<usize>, Vec<usize>) =
            self.sample_ids.iter().partition(|&&n| node.goes_right(dataset.row(n)));
        (
            NodePartition { node_id: 2 * self.node_id + 1, sample_ids: left },
            NodePartition { node_id: 2 * self.node_id + 2, sample_ids: right },
        )
    }
}

/// Index of the first node on `level`.
pub fn level_start(level: usize) -> usize {
    (1 << level) - 1
}

/// Draws `pool` distinct features (uniformly, without replacement) and
/// `thresholds_per_feature` thresholds for each, uniform on the open
/// interval between the feature's minimum and maximum over the partition.
pub fn sample_candidates<T: Scalar, R: Rng + ?Sized>(
    partition: &NodePartition,
    dataset: &Dataset<T>,
    config: &TrainConfig,
    rng: &mut R,
) -> Vec<SplitCandidate<T>> {
    let d = dataset.feature_dim();
    let pool = config.feature_pool.size(d);
    let per = config.thresholds_per_feature;
    let features = rand::seq::index::sample(rng, d, pool);
    let mut out = Vec::with_capacity(pool * per);
    for feature in features.iter() {
        let (lo, hi) = partition.sample_ids.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), &n| {
            let v = dataset.value(n, feature);
            (lo.min(v), hi.max(v))
        });
        let degenerate = !(lo < hi);
        for _ in 0..per {
            let u: f64 = rng.sample(Open01);
            if degenerate {
                out.push(SplitCandidate { feature, threshold: lo, valid: false });
                continue;
            }
            let t = lo + T::lit(u) * (hi - lo);
            // Anything in (lo, hi] leaves both children non-empty.
            let valid = t > lo && t <= hi;
            out.push(SplitCandidate { feature, threshold: t, valid });
        }
    }
    out
}

/// Scores each valid candidate with `score` (lower is better) and returns the
/// best one together with its score and payload. Ties within a relative
/// `1e-15` go to the lexicographically smaller `(feature, threshold)`.
pub(crate) fn select_best<T, P, F>(candidates: Vec<SplitCandidate<T>>, score: F) -> Option<(SplitCandidate<T>, T, P)>
where
    T: Scalar,
    P: Send,
    F: Fn(&SplitCandidate<T>) -> (T, P) + Sync + Send,
{
    let mut valid: Vec<SplitCandidate<T>> = candidates.into_iter().filter(|c| c.valid).collect();
    valid.sort_by(|a, b| a.lex_cmp(b));
    let scored: Vec<(T, P)> = valid.par_iter().map(&score).collect();
    let tol = T::lit(1e-15);
    let mut best: Option<(SplitCandidate<T>, T, P)> = None;
    for (cand, (loss, payload)) in valid.into_iter().zip(scored) {
        if !loss.is_finite() {
            continue;
        }
        let better = match &best {
            None => true,
            Some((_, b, _)) => loss < *b - tol * b.abs().max(T::one()),
        };
        if better {
            best = Some((cand, loss, payload));
        }
    }
    best
}

/// Grows one level: `decide` picks the node for each partition (or `None`
/// for inactive). Returns the level's nodes and the next level's partitions.
pub(crate) fn grow_level_with<T, F>(
    partitions: &[NodePartition],
    dataset: &Dataset<T>,
    config: &TrainConfig,
    tree_index: usize,
    level: usize,
    decide: F,
) -> (Vec<DecisionNode<T>>, Vec<NodePartition>)
where
    T: Scalar,
    F: Fn(&NodePartition, Vec<SplitCandidate<T>>) -> Option<SplitCandidate<T>> + Sync + Send,
{
    let results: Vec<(DecisionNode<T>, NodePartition, NodePartition)> = partitions
        .par_iter()
        .map(|part| {
            let node = if part.sample_ids.len() < 2 {
                DecisionNode::inactive()
            } else {
                let mut rng = node_stream(config.seed, tree_index, level, part.node_id);
                let candidates = sample_candidates(part, dataset, config, &mut rng);
                decide(part, candidates).map_or_else(DecisionNode::inactive, |c| c.node())
            };
            let (l, r) = part.split(&node, dataset);
            (node, l, r)
        })
        .collect();
    let mut nodes = Vec::with_capacity(results.len());
    let mut next = Vec::with_capacity(2 * results.len());
    for (node, l, r) in results {
        nodes.push(node);
        next.push(l);
        next.push(r);
    }
    (nodes, next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::FeaturePool;
    use crate::rng::node_stream;

    fn grid(n: usize, d: usize) -> Dataset<f64> {
        let features = (0..n * d).map(|i| ((i * 7919) % 101) as f64 / 10.0).collect();
        Dataset::new(features, (0..n).map(|i| i % 2).collect(), d, 2).unwrap()
    }

    #[test]
    fn auto_pool_on_sixteen_features() {
        let ds = grid(50, 16);
        let part = NodePartition::root((0..50).collect());
        let cfg = TrainConfig::default();
        let cands = sample_candidates(&part, &ds, &cfg, &mut node_stream(1, 0, 0, 0));
        assert_eq!(cands.len(), 40);
        let mut feats: Vec<usize> = cands.iter().map(|c| c.feature).collect();
        feats.dedup();
        assert_eq!(feats.len(), 4);
        feats.sort();
        feats.dedup();
        assert_eq!(feats.len(), 4);
        assert!(cands.iter().all(|c| c.valid));
    }

    #[test]
    fn constant_features_give_invalid_candidates() {
        let ds = Dataset::new(vec![3.0f64; 4 * 5], vec![0, 1, 0, 1], 5, 2).unwrap();
        let part = NodePartition::root(vec![0, 1, 2, 3]);
        let cfg = TrainConfig { feature_pool: FeaturePool::Fixed(5), ..Default::default() };
        let cands = sample_candidates(&part, &ds, &cfg, &mut node_stream(1, 0, 0, 0));
        assert_eq!(cands.len(), 50);
        assert!(cands.iter().all(|c| !c.valid));
    }

    #[test]
    fn same_stream_same_candidates() {
        let ds = grid(30, 9);
        let part = NodePartition::root((0..30).collect());
        let cfg = TrainConfig::default();
        let a = sample_candidates(&part, &ds, &cfg, &mut node_stream(5, 2, 1, 1));
        let b = sample_candidates(&part, &ds, &cfg, &mut node_stream(5, 2, 1, 1));
        assert_eq!(a, b);
    }

    #[test]
    fn thresholds_stay_inside_node_range() {
        let ds = grid(40, 3);
        let part = NodePartition::root((5..25).collect());
        let cfg = TrainConfig { feature_pool: FeaturePool::Fixed(3), ..Default::default() };
        for c in sample_candidates(&part, &ds, &cfg, &mut node_stream(9, 0, 0, 0)) {
            let vals: Vec<f64> = part.sample_ids.iter().map(|&n| ds.value(n, c.feature)).collect();
            let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            assert!(c.threshold > lo && c.threshold <= hi);
            let (l, r) = part.split(&c.node(), &ds);
            assert!(!l.is_empty() && !r.is_empty());
        }
    }

    #[test]
    fn ties_go_to_smallest_feature_then_threshold() {
        let c = |f, t| SplitCandidate { feature: f, threshold: t, valid: true };
        let cands = vec![c(3, 0.1f64), c(1, 0.9), c(1, 0.4), c(2, 0.0)];
        let (best, _, _) = select_best(cands.clone(), |_| (1.0, ())).unwrap();
        assert_eq!((best.feature, best.threshold), (1, 0.4));
        let (best, _, _) = select_best(cands, |c| (if c.feature == 3 { 0.5 } else { 1.0 }, ())).unwrap();
        assert_eq!(best.feature, 3);
    }

    #[test]
    fn inactive_sends_everything_left() {
        let ds = grid(10, 2);
        let part = NodePartition { node_id: 2, sample_ids: (0..10).collect() };
        let (l, r) = part.split(&DecisionNode::inactive(), &ds);
        assert_eq!((l.node_id, r.node_id), (5, 6));
        assert_eq!(l.sample_ids.len(), 10);
        assert!(r.is_empty());
    }
}
