//! Routing and prediction for both forest kinds.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::loss::softmax_in_place;
use crate::model::{ForestModel, ModelKind, TreeModel};
use crate::scalar::Scalar;

/// Leaf of `tree` reached by `x`.
pub fn route<T: Scalar>(tree: &TreeModel<T>, x: &[T]) -> Result<usize> {
    if let Some(f) = tree.max_feature() {
        if f >= x.len() {
            return Err(Error::validation(format!("tree reads feature {f} but input has {} features", x.len())));
        }
    }
    Ok(tree.route_unchecked(x))
}

fn check_dim<T: Scalar>(forest: &ForestModel<T>, x: &[T]) -> Result<()> {
    if x.len() != forest.feature_dim() {
        return Err(Error::validation(format!(
            "input has {} features, model expects {}",
            x.len(),
            forest.feature_dim()
        )));
    }
    Ok(())
}

/// Class distribution from the first trees of a forest. `x` must already be
/// dimension-checked.
pub(crate) fn proba_from_trees<T: Scalar>(
    kind: ModelKind,
    trees: &[TreeModel<T>],
    num_classes: usize,
    x: &[T],
) -> Vec<T> {
    let mut out = vec![T::zero(); num_classes];
    if trees.is_empty() {
        return vec![T::one() / T::count(num_classes); num_classes];
    }
    match kind {
        ModelKind::Rlf => {
            for tree in trees {
                for (o, v) in out.iter_mut().zip(tree.leaf(tree.route_unchecked(x))) {
                    *o = *o + *v;
                }
            }
            softmax_in_place(&mut out);
        }
        ModelKind::Rf => {
            for tree in trees {
                for (o, v) in out.iter_mut().zip(tree.leaf(tree.route_unchecked(x))) {
                    *o = *o + v.exp();
                }
            }
            let n = T::count(trees.len());
            out.iter_mut().for_each(|o| *o = *o / n);
        }
    }
    out
}

/// First index of the largest entry.
pub(crate) fn argmax<T: Scalar>(p: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in p.iter().enumerate().skip(1) {
        if *v > p[best] {
            best = i;
        }
    }
    best
}

/// Normalized product of leaf residuals (RLF) or mean of leaf distributions
/// (RF). An empty forest predicts the uniform distribution.
pub fn predict_proba<T: Scalar>(forest: &ForestModel<T>, x: &[T]) -> Result<Vec<T>> {
    check_dim(forest, x)?;
    Ok(proba_from_trees(forest.kind(), forest.trees(), forest.num_classes(), x))
}

/// Most probable class; ties go to the lowest index.
pub fn predict_class<T: Scalar>(forest: &ForestModel<T>, x: &[T]) -> Result<usize> {
    predict_proba(forest, x).map(|p| argmax(&p))
}

/// [`predict_class`] for every row of `dataset`.
pub fn batch_predict<T: Scalar>(forest: &ForestModel<T>, dataset: &Dataset<T>) -> Result<Vec<usize>> {
    batch_predict_prefix(forest, dataset, forest.len())
}

/// Like [`batch_predict`] but using only the first `num_trees` trees.
pub fn batch_predict_prefix<T: Scalar>(
    forest: &ForestModel<T>,
    dataset: &Dataset<T>,
    num_trees: usize,
) -> Result<Vec<usize>> {
    if dataset.feature_dim() != forest.feature_dim() {
        return Err(Error::validation(format!(
            "dataset has {} features, model expects {}",
            dataset.feature_dim(),
            forest.feature_dim()
        )));
    }
    use rayon::prelude::*;
    let trees = &forest.trees()[..num_trees.min(forest.len())];
    let rows: Vec<&[T]> = dataset.rows().collect();
    Ok(rows.par_iter().map(|x| argmax(&proba_from_trees(forest.kind(), trees, forest.num_classes(), x))).collect())
}
