//! Residual likelihood forest induction.
//!
//! Trees are added one at a time. Each tree is grown level by level: every
//! node draws random `(feature, threshold)` candidates, fits the
//! loss-minimizing residual for both children of each candidate against the
//! current prior, and keeps the candidate with the lowest loss over its
//! samples. The loss of the whole training set decomposes over samples, so
//! scoring a node only needs that node's samples.

use rayon::prelude::*;

use crate::config::TrainConfig;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::loss::cross_entropy_loss;
use crate::model::{DecisionNode, ForestModel, ModelKind, PriorState, TreeModel};
use crate::residual::PriorSnapshot;
use crate::rng::{tree_stream, Purpose};
use crate::scalar::Scalar;
use crate::split::{grow_level_with, select_best, NodePartition, SplitCandidate};

/// Loss of one candidate over its node's samples, with the children's
/// log-residuals that produce it.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateScore<T> {
    pub loss: T,
    pub left_residual: Vec<T>,
    pub right_residual: Vec<T>,
}

/// Scores `candidate` on `partition`. An empty child keeps the neutral
/// residual; with both children neutral this is the node's prior loss.
pub fn candidate_loss<T: Scalar>(
    candidate: &SplitCandidate<T>,
    partition: &NodePartition,
    dataset: &Dataset<T>,
    prior: &PriorSnapshot<T>,
    config: &TrainConfig,
) -> CandidateScore<T> {
    let (left, right) = partition.split(&candidate.node(), dataset);
    let labels = dataset.labels();
    let eps = T::lit(config.epsilon);
    let l = prior.fit(&left.sample_ids, labels, config.residual_iterations, eps);
    let r = prior.fit(&right.sample_ids, labels, config.residual_iterations, eps);
    CandidateScore { loss: l.loss + r.loss, left_residual: l.log_residual, right_residual: r.log_residual }
}

/// Chooses the nodes of one level. A node with no valid candidate, or whose
/// best candidate does not strictly lower its prior loss, becomes inactive
/// and passes all of its samples to its left child.
pub fn grow_tree_level<T: Scalar>(
    partitions: &[NodePartition],
    dataset: &Dataset<T>,
    prior: &PriorSnapshot<T>,
    config: &TrainConfig,
    tree_index: usize,
    level: usize,
) -> (Vec<DecisionNode<T>>, Vec<NodePartition>) {
    grow_level_with(partitions, dataset, config, tree_index, level, |part, candidates| {
        let reference = prior.neutral_loss(&part.sample_ids);
        let (best, loss, ()) = select_best(candidates, |c| (candidate_loss(c, part, dataset, prior, config).loss, ()))?;
        (loss < reference).then_some(best)
    })
}

pub(crate) fn root_samples<T: Scalar>(
    dataset: &Dataset<T>,
    config: &TrainConfig,
    tree_index: usize,
    bag_default: bool,
) -> Vec<usize> {
    let n = dataset.len();
    if config.bagging.unwrap_or(bag_default) {
        use rand::Rng;
        let mut rng = tree_stream(config.seed, tree_index, Purpose::Bootstrap);
        (0..n).map(|_| rng.random_range(0..n)).collect()
    } else {
        (0..n).collect()
    }
}

/// Grows `config.max_depth` levels and fills each leaf with the residual
/// fitted to the samples that reach it. A leaf whose fitted residual does not
/// lower its samples' loss, or that no sample reaches, stays neutral.
pub fn train_tree<T: Scalar>(
    dataset: &Dataset<T>,
    prior: &PriorState<T>,
    config: &TrainConfig,
    tree_index: usize,
) -> Result<TreeModel<T>> {
    config.validate()?;
    let snapshot = PriorSnapshot::new(prior, dataset.labels())?;
    if prior.num_classes() != dataset.num_classes() {
        return Err(Error::validation("prior state and dataset disagree on class count"));
    }
    Ok(train_tree_with(dataset, &snapshot, config, tree_index))
}

pub(crate) fn train_tree_with<T: Scalar>(
    dataset: &Dataset<T>,
    snapshot: &PriorSnapshot<T>,
    config: &TrainConfig,
    tree_index: usize,
) -> TreeModel<T> {
    let nc = dataset.num_classes();
    let mut nodes = Vec::with_capacity((1 << config.max_depth) - 1);
    let mut partitions = vec![NodePartition::root(root_samples(dataset, config, tree_index, false))];
    for level in 0..config.max_depth {
        let (level_nodes, next) = grow_tree_level(&partitions, dataset, snapshot, config, tree_index, level);
        nodes.extend(level_nodes);
        partitions = next;
    }
    let labels = dataset.labels();
    let eps = T::lit(config.epsilon);
    let rows: Vec<Vec<T>> = partitions
        .par_iter()
        .map(|leaf| {
            let fit = snapshot.fit(&leaf.sample_ids, labels, config.residual_iterations, eps);
            if !leaf.is_empty() && fit.loss < snapshot.neutral_loss(&leaf.sample_ids) {
                fit.log_residual
            } else {
                vec![T::zero(); nc]
            }
        })
        .collect();
    TreeModel::new(config.max_depth, nc, nodes, rows.concat()).expect("grown tree has complete shape")
}

/// Adds each sample's leaf log-residual from `tree` to its prior row.
pub fn update_priors<T: Scalar>(prior: &mut PriorState<T>, tree: &TreeModel<T>, dataset: &Dataset<T>) -> Result<()> {
    if prior.num_samples() != dataset.len() || prior.num_classes() != tree.num_classes() {
        return Err(Error::validation("prior state, tree and dataset shapes disagree"));
    }
    if tree.max_feature().is_some_and(|f| f >= dataset.feature_dim()) {
        return Err(Error::validation("tree reads features beyond the dataset dimension"));
    }
    let nc = prior.num_classes();
    prior.log_prior_mut().par_chunks_exact_mut(nc).enumerate().for_each(|(n, row)| {
        let leaf = tree.leaf(tree.route_unchecked(dataset.row(n)));
        for (p, q) in row.iter_mut().zip(leaf) {
            *p = *p + *q;
        }
    });
    Ok(())
}

/// Training-set loss of the normalized posteriors in `prior`.
pub fn training_loss<T: Scalar>(prior: &PriorState<T>, dataset: &Dataset<T>) -> Result<T> {
    cross_entropy_loss(&prior.posteriors(), prior.num_classes(), dataset.labels())
}

/// Incremental trainer: each [`RlfTrainer::step`] grows one tree against the
/// current prior and folds it in.
#[derive(Debug)]
pub struct RlfTrainer<'a, T> {
    dataset: &'a Dataset<T>,
    config: TrainConfig,
    prior: PriorState<T>,
    forest: ForestModel<T>,
}

impl<'a, T: Scalar> RlfTrainer<'a, T> {
    pub fn new(dataset: &'a Dataset<T>, config: &TrainConfig) -> Result<Self> {
        config.validate()?;
        if dataset.is_empty() {
            return Err(Error::validation("cannot train on an empty dataset"));
        }
        Ok(RlfTrainer {
            dataset,
            config: config.clone(),
            prior: PriorState::uniform(dataset.len(), dataset.num_classes()),
            forest: ForestModel::new(ModelKind::Rlf, dataset.num_classes(), dataset.feature_dim())?,
        })
    }

    /// Trains the next tree and returns the training loss with it included.
    pub fn step(&mut self) -> Result<T> {
        let snapshot = PriorSnapshot::new(&self.prior, self.dataset.labels())?;
        let tree = train_tree_with(self.dataset, &snapshot, &self.config, self.forest.len());
        update_priors(&mut self.prior, &tree, self.dataset)?;
        self.forest.push(tree)?;
        training_loss(&self.prior, self.dataset)
    }

    pub fn prior(&self) -> &PriorState<T> {
        &self.prior
    }

    pub fn forest(&self) -> &ForestModel<T> {
        &self.forest
    }

    pub fn into_forest(self) -> ForestModel<T> {
        self.forest
    }
}

/// Trains `config.num_trees` trees from a uniform prior. Returns the forest
/// and the training loss after each tree.
pub fn train_forest<T: Scalar>(dataset: &Dataset<T>, config: &TrainConfig) -> Result<(ForestModel<T>, Vec<T>)> {
    let mut trainer = RlfTrainer::new(dataset, config)?;
    let trace = (0..config.num_trees).map(|_| trainer.step()).collect::<Result<Vec<_>>>()?;
    Ok((trainer.into_forest(), trace))
}
