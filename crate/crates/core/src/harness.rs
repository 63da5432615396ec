//! Multi-seed experiments: error tables, learning curves over tree count and
//! depth, and model-capacity comparisons.

use std::io::Write;
use std::time::Instant;

use crate::config::TrainConfig;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::model::{ForestModel, ModelKind};
use crate::predict::batch_predict_prefix;
use crate::rf::train_rf_tree;
use crate::scalar::Scalar;
use crate::train::RlfTrainer;

/// Header of the experiment CSV.
pub const CSV_HEADER: &str = "method,depth,trees,seed_base,runs,mean_error,std_error,leaf_count,wall_time_s";

/// Aggregate of several seeded runs of one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub method: ModelKind,
    pub config: TrainConfig,
    pub seeds: Vec<u64>,
    pub errors: Vec<f64>,
    pub mean_error: f64,
    /// Population standard deviation of `errors`.
    pub std_error: f64,
    /// Populated leaves of each run's model.
    pub leaf_counts: Vec<usize>,
    /// Mean of `leaf_counts`.
    pub model_leaf_count: f64,
    pub wall_times: Vec<f64>,
}

impl ExperimentResult {
    fn from_runs(method: ModelKind, config: TrainConfig, seeds: Vec<u64>, runs: Vec<RunPoint>) -> Self {
        let errors: Vec<f64> = runs.iter().map(|r| r.error).collect();
        let leaf_counts: Vec<usize> = runs.iter().map(|r| r.leaves).collect();
        let (mean_error, std_error) = mean_std(&errors);
        let model_leaf_count = leaf_counts.iter().sum::<usize>() as f64 / leaf_counts.len() as f64;
        ExperimentResult {
            method,
            config,
            seeds,
            errors,
            mean_error,
            std_error,
            leaf_counts,
            model_leaf_count,
            wall_times: runs.iter().map(|r| r.seconds).collect(),
        }
    }

    pub fn mean_wall_time(&self) -> f64 {
        self.wall_times.iter().sum::<f64>() / self.wall_times.len() as f64
    }
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Fraction of `test` rows whose predicted class differs from the label.
pub fn evaluate_error<T: Scalar>(forest: &ForestModel<T>, test: &Dataset<T>) -> Result<f64> {
    evaluate_error_prefix(forest, test, forest.len())
}

fn evaluate_error_prefix<T: Scalar>(forest: &ForestModel<T>, test: &Dataset<T>, trees: usize) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::validation("cannot evaluate on an empty test set"));
    }
    let predicted = batch_predict_prefix(forest, test, trees)?;
    let wrong = predicted.iter().zip(test.labels()).filter(|(p, y)| p != y).count();
    Ok(wrong as f64 / test.len() as f64)
}

/// `(tree, leaf)` pairs reached by at least one row of `train`, over the
/// first `trees` trees.
pub fn populated_leaves<T: Scalar>(forest: &ForestModel<T>, train: &Dataset<T>, trees: usize) -> usize {
    forest.trees()[..trees.min(forest.len())]
        .iter()
        .map(|tree| {
            let mut hit = vec![false; tree.num_leaves()];
            for row in train.rows() {
                hit[tree.route_unchecked(row)] = true;
            }
            hit.into_iter().filter(|&h| h).count()
        })
        .sum()
}

#[derive(Debug, Clone, Copy)]
struct RunPoint {
    error: f64,
    leaves: usize,
    seconds: f64,
}

/// Trains one model with `max(checkpoints)` trees, measuring test error,
/// populated leaves and cumulative training time at each checkpoint.
fn run_with_checkpoints<T: Scalar>(
    train: &Dataset<T>,
    test: &Dataset<T>,
    config: &TrainConfig,
    method: ModelKind,
    checkpoints: &[usize],
) -> Result<Vec<RunPoint>> {
    let total = checkpoints.iter().copied().max().unwrap_or(0);
    let config = TrainConfig { num_trees: total, ..config.clone() };
    config.validate()?;
    if test.feature_dim() != train.feature_dim() || test.num_classes() != train.num_classes() {
        return Err(Error::validation("train and test sets disagree on feature or class count"));
    }
    let mut elapsed = Vec::with_capacity(total);
    let start = Instant::now();
    let forest = match method {
        ModelKind::Rlf => {
            let mut trainer = RlfTrainer::new(train, &config)?;
            for _ in 0..total {
                trainer.step()?;
                elapsed.push(start.elapsed().as_secs_f64());
            }
            trainer.into_forest()
        }
        ModelKind::Rf => {
            if train.is_empty() {
                return Err(Error::validation("cannot train on an empty dataset"));
            }
            let mut forest = ForestModel::new(ModelKind::Rf, train.num_classes(), train.feature_dim())?;
            for t in 0..total {
                forest.push(train_rf_tree(train, &config, t))?;
                elapsed.push(start.elapsed().as_secs_f64());
            }
            forest
        }
    };
    checkpoints
        .iter()
        .map(|&k| {
            Ok(RunPoint {
                error: evaluate_error_prefix(&forest, test, k)?,
                leaves: populated_leaves(&forest, train, k),
                seconds: elapsed[k - 1],
            })
        })
        .collect()
}

/// Runs `num_runs` trainings with seeds `config.seed + i`.
pub fn run_experiment<T: Scalar>(
    train: &Dataset<T>,
    test: &Dataset<T>,
    config: &TrainConfig,
    method: ModelKind,
    num_runs: usize,
) -> Result<ExperimentResult> {
    if num_runs == 0 {
        return Err(Error::validation("num_runs must be at least 1"));
    }
    let seeds: Vec<u64> = (0..num_runs as u64).map(|i| config.seed.wrapping_add(i)).collect();
    run_experiment_with_seeds(train, test, config, method, &seeds)
}

/// Runs one training per entry of `seeds`.
pub fn run_experiment_with_seeds<T: Scalar>(
    train: &Dataset<T>,
    test: &Dataset<T>,
    config: &TrainConfig,
    method: ModelKind,
    seeds: &[u64],
) -> Result<ExperimentResult> {
    if seeds.is_empty() {
        return Err(Error::validation("at least one seed is required"));
    }
    let runs = seeds
        .iter()
        .map(|&seed| {
            let cfg = TrainConfig { seed, ..config.clone() };
            run_with_checkpoints(train, test, &cfg, method, &[config.num_trees]).map(|mut v| v.remove(0))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentResult::from_runs(method, config.clone(), seeds.to_vec(), runs))
}

/// One `(depth, trees)` cell of a learning curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveCell {
    pub depth: usize,
    pub trees: usize,
    pub result: ExperimentResult,
}

/// Error over a grid of tree counts and depths. Each run trains the largest
/// tree count once per depth and reads the smaller counts off its prefixes,
/// which is identical to training them separately.
pub fn learning_curve<T: Scalar>(
    train: &Dataset<T>,
    test: &Dataset<T>,
    config: &TrainConfig,
    method: ModelKind,
    tree_counts: &[usize],
    depths: &[usize],
    num_runs: usize,
) -> Result<Vec<CurveCell>> {
    if tree_counts.is_empty() || depths.is_empty() {
        return Err(Error::validation("learning curve grids must be non-empty"));
    }
    if tree_counts.contains(&0) {
        return Err(Error::validation("tree counts must be at least 1"));
    }
    if num_runs == 0 {
        return Err(Error::validation("num_runs must be at least 1"));
    }
    let seeds: Vec<u64> = (0..num_runs as u64).map(|i| config.seed.wrapping_add(i)).collect();
    let mut cells = Vec::new();
    for &depth in depths {
        let per_seed = seeds
            .iter()
            .map(|&seed| {
                let cfg = TrainConfig { seed, max_depth: depth, ..config.clone() };
                run_with_checkpoints(train, test, &cfg, method, tree_counts)
            })
            .collect::<Result<Vec<_>>>()?;
        for (i, &trees) in tree_counts.iter().enumerate() {
            let runs = per_seed.iter().map(|points| points[i]).collect();
            let cfg = TrainConfig { num_trees: trees, max_depth: depth, ..config.clone() };
            cells.push(CurveCell {
                depth,
                trees,
                result: ExperimentResult::from_runs(method, cfg, seeds.clone(), runs),
            });
        }
    }
    Ok(cells)
}

/// Capacity of `reference` over capacity of `subject`, both in populated leaves.
pub fn compression_ratio(reference: &ExperimentResult, subject: &ExperimentResult) -> Result<f64> {
    if !(subject.model_leaf_count > 0.0) {
        return Err(Error::validation("subject model has no populated leaves"));
    }
    Ok(reference.model_leaf_count / subject.model_leaf_count)
}

/// Writes the header and one row per cell, LF line endings.
pub fn write_curve_csv<W: Write + ?Sized>(cells: &[CurveCell], w: &mut W) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for cell in cells {
        let r = &cell.result;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.method,
            cell.depth,
            cell.trees,
            r.seeds.first().copied().unwrap_or(r.config.seed),
            r.errors.len(),
            r.mean_error,
            r.std_error,
            r.model_leaf_count,
            r.mean_wall_time()
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DecisionNode, TreeModel};
    use crate::synthetic::GaussianMixture;

    fn stump_forest() -> ForestModel<f64> {
        let mut f = ForestModel::new(ModelKind::Rlf, 2, 1).unwrap();
        let t = TreeModel::new(1, 2, vec![DecisionNode::split(0, 0.5)], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        f.push(t).unwrap();
        f
    }

    #[test]
    fn error_examples() {
        let f = stump_forest();
        let xs = vec![0.1, 0.2, 0.8, 0.9];
        let right = Dataset::new(xs.clone(), vec![0, 0, 1, 1], 1, 2).unwrap();
        let wrong = Dataset::new(xs.clone(), vec![1, 1, 0, 0], 1, 2).unwrap();
        let one = Dataset::new(xs, vec![0, 0, 1, 0], 1, 2).unwrap();
        assert_eq!(evaluate_error(&f, &right).unwrap(), 0.0);
        assert_eq!(evaluate_error(&f, &wrong).unwrap(), 1.0);
        assert_eq!(evaluate_error(&f, &one).unwrap(), 0.25);
        assert_eq!(evaluate_error(&f, &one.select(&[3, 1, 0, 2])).unwrap(), 0.25);
        let empty = Dataset::<f64>::new(vec![], vec![], 1, 2).unwrap();
        assert!(evaluate_error(&f, &empty).is_err());
    }

    #[test]
    fn population_std() {
        let (m, s) = mean_std(&[0.1, 0.3]);
        assert!((m - 0.2).abs() < 1e-15 && (s - 0.1).abs() < 1e-15);
        assert_eq!(mean_std(&[0.4]).1, 0.0);
    }

    #[test]
    fn compression_examples() {
        let g = GaussianMixture::new(2, 3, 1, 2.0, 1);
        let (tr, te) = (g.sample(100, 1), g.sample(50, 2));
        let cfg = TrainConfig { num_trees: 2, max_depth: 3, ..Default::default() };
        let a = run_experiment(&tr, &te, &cfg, ModelKind::Rlf, 1).unwrap();
        assert_eq!(compression_ratio(&a, &a).unwrap(), 1.0);
        let half = ExperimentResult { model_leaf_count: a.model_leaf_count / 2.0, ..a.clone() };
        assert_eq!(compression_ratio(&a, &half).unwrap(), 2.0);
        let zero = ExperimentResult { model_leaf_count: 0.0, ..a.clone() };
        assert!(compression_ratio(&a, &zero).is_err());
    }

    #[test]
    fn runs_and_seeds() {
        let g = GaussianMixture::new(3, 4, 2, 1.5, 7);
        let (tr, te) = (g.sample(150, 1), g.sample(90, 2));
        let cfg = TrainConfig { num_trees: 3, max_depth: 4, seed: 10, ..Default::default() };
        let one = run_experiment(&tr, &te, &cfg, ModelKind::Rlf, 1).unwrap();
        assert_eq!(one.std_error, 0.0);
        let same = run_experiment_with_seeds(&tr, &te, &cfg, ModelKind::Rf, &[4, 4, 4]).unwrap();
        assert_eq!(same.std_error, 0.0);
        let a = run_experiment(&tr, &te, &cfg, ModelKind::Rf, 3).unwrap();
        let b = run_experiment(&tr, &te, &cfg, ModelKind::Rf, 3).unwrap();
        assert_eq!(a.errors, b.errors);
        assert_eq!(a.seeds, vec![10, 11, 12]);
        let (m, s) = mean_std(&a.errors);
        assert!((m - a.mean_error).abs() < 1e-12 && (s - a.std_error).abs() < 1e-12);
        assert!(run_experiment(&tr, &te, &cfg, ModelKind::Rf, 0).is_err());
    }

    #[test]
    fn single_cell_curve_matches_experiment() {
        let g = GaussianMixture::new(3, 4, 2, 1.5, 7);
        let (tr, te) = (g.sample(150, 1), g.sample(90, 2));
        let cfg = TrainConfig { num_trees: 4, max_depth: 3, seed: 2, ..Default::default() };
        for method in [ModelKind::Rlf, ModelKind::Rf] {
            let exp = run_experiment(&tr, &te, &cfg, method, 2).unwrap();
            let curve = learning_curve(&tr, &te, &cfg, method, &[4], &[3], 2).unwrap();
            assert_eq!(curve.len(), 1);
            assert_eq!(curve[0].result.errors, exp.errors);
            assert_eq!(curve[0].result.leaf_counts, exp.leaf_counts);
            // Prefix cells match independent runs with fewer trees.
            let curve = learning_curve(&tr, &te, &cfg, method, &[1, 4], &[3], 2).unwrap();
            let small = run_experiment(&tr, &te, &TrainConfig { num_trees: 1, ..cfg.clone() }, method, 2).unwrap();
            assert_eq!(curve[0].result.errors, small.errors);
            assert_eq!(curve[0].result.leaf_counts, small.leaf_counts);
        }
    }

    #[test]
    fn csv_layout() {
        let g = GaussianMixture::new(2, 2, 1, 2.0, 1);
        let (tr, te) = (g.sample(60, 1), g.sample(30, 2));
        let cfg = TrainConfig { max_depth: 2, ..Default::default() };
        let cells = learning_curve(&tr, &te, &cfg, ModelKind::Rlf, &[1, 2], &[2, 3], 1).unwrap();
        let mut out = Vec::new();
        write_curve_csv(&cells, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("rlf,2,1,0,1,"));
        assert!(!text.contains('\r'));
        assert!(lines.iter().all(|l| l.split(',').count() == 9));
    }
}
