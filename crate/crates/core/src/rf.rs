//! Random forest baseline: Gini splits over the same random candidate scheme
//! as the residual forest, bootstrap resampling per tree, and leaves storing
//! Laplace-smoothed class frequencies.

use rand::Rng;
use rayon::prelude::*;

use crate::config::TrainConfig;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::model::{ForestModel, ModelKind, TreeModel};
use crate::scalar::Scalar;
use crate::split::{grow_level_with, sample_candidates, select_best, NodePartition, SplitCandidate};
use crate::train::root_samples;

/// Additive smoothing applied to leaf class counts.
pub const LAPLACE_ALPHA: f64 = 1.0;

/// `1 - sum_j (count_j / total)^2`.
pub fn gini_impurity<T: Scalar>(class_counts: &[usize]) -> Result<T> {
    let total: usize = class_counts.iter().sum();
    if total == 0 {
        return Err(Error::validation("gini impurity of an empty node"));
    }
    Ok(gini_unchecked(class_counts, total))
}

fn gini_unchecked<T: Scalar>(counts: &[usize], total: usize) -> T {
    let total = T::count(total);
    let sq: T = counts
        .iter()
        .map(|&c| {
            let p = T::count(c) / total;
            p * p
        })
        .sum();
    T::one() - sq
}

fn counts_of<T: Scalar>(ids: &[usize], dataset: &Dataset<T>) -> Vec<usize> {
    let mut counts = vec![0; dataset.num_classes()];
    for &n in ids {
        counts[dataset.label(n)] += 1;
    }
    counts
}

/// Size-weighted Gini of the children produced by `candidate`.
pub fn weighted_child_gini<T: Scalar>(
    candidate: &SplitCandidate<T>,
    partition: &NodePartition,
    dataset: &Dataset<T>,
) -> T {
    let nc = dataset.num_classes();
    let mut left = vec![0; nc];
    let mut right = vec![0; nc];
    for &n in &partition.sample_ids {
        if dataset.value(n, candidate.feature) < candidate.threshold {
            left[dataset.label(n)] += 1;
        } else {
            right[dataset.label(n)] += 1;
        }
    }
    let nl: usize = left.iter().sum();
    let nr: usize = right.iter().sum();
    let mut total = T::zero();
    if nl > 0 {
        total = total + T::count(nl) * gini_unchecked::<T>(&left, nl);
    }
    if nr > 0 {
        total = total + T::count(nr) * gini_unchecked::<T>(&right, nr);
    }
    total / T::count(nl + nr)
}

fn choose_gini<T: Scalar>(
    partition: &NodePartition,
    dataset: &Dataset<T>,
    candidates: Vec<SplitCandidate<T>>,
) -> Option<SplitCandidate<T>> {
    if partition.is_empty() {
        return None;
    }
    let parent = gini_unchecked::<T>(&counts_of(&partition.sample_ids, dataset), partition.len());
    let (best, score, ()) = select_best(candidates, |c| (weighted_child_gini(c, partition, dataset), ()))?;
    (score < parent - T::lit(1e-12)).then_some(best)
}

/// Best Gini split among freshly drawn candidates, or `None` when no
/// candidate lowers the node's impurity (pure nodes included).
pub fn best_gini_split<T: Scalar, R: Rng + ?Sized>(
    partition: &NodePartition,
    dataset: &Dataset<T>,
    config: &TrainConfig,
    rng: &mut R,
) -> Option<SplitCandidate<T>> {
    let candidates = sample_candidates(partition, dataset, config, rng);
    choose_gini(partition, dataset, candidates)
}

/// Log of `(count_j + alpha) / (n + alpha * N_c)`; the uniform distribution
/// for an empty leaf.
pub fn smoothed_log_distribution<T: Scalar>(counts: &[usize]) -> Vec<T> {
    let alpha = T::lit(LAPLACE_ALPHA);
    let total: usize = counts.iter().sum();
    let denom = T::count(total) + alpha * T::count(counts.len());
    counts.iter().map(|&c| ((T::count(c) + alpha) / denom).ln()).collect()
}

/// One baseline tree, trained on its own bootstrap sample unless bagging is
/// switched off in `config`.
pub fn train_rf_tree<T: Scalar>(dataset: &Dataset<T>, config: &TrainConfig, tree_index: usize) -> TreeModel<T> {
    let nc = dataset.num_classes();
    let mut nodes = Vec::with_capacity((1 << config.max_depth) - 1);
    let mut partitions = vec![NodePartition::root(root_samples(dataset, config, tree_index, true))];
    for level in 0..config.max_depth {
        let (level_nodes, next) = grow_level_with(&partitions, dataset, config, tree_index, level, |part, cands| {
            choose_gini(part, dataset, cands)
        });
        nodes.extend(level_nodes);
        partitions = next;
    }
    let leaves: Vec<T> = partitions
        .iter()
        .flat_map(|leaf| smoothed_log_distribution::<T>(&counts_of(&leaf.sample_ids, dataset)))
        .collect();
    TreeModel::new(config.max_depth, nc, nodes, leaves).expect("grown tree has complete shape")
}

/// Trains `config.num_trees` independent trees (in parallel).
pub fn train_rf<T: Scalar>(dataset: &Dataset<T>, config: &TrainConfig) -> Result<ForestModel<T>> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::validation("cannot train on an empty dataset"));
    }
    let trees: Vec<TreeModel<T>> =
        (0..config.num_trees).into_par_iter().map(|t| train_rf_tree(dataset, config, t)).collect();
    let mut forest = ForestModel::new(ModelKind::Rf, dataset.num_classes(), dataset.feature_dim())?;
    for tree in trees {
        forest.push(tree)?;
    }
    Ok(forest)
}
