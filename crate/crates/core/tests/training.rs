use proptest::prelude::*;

use rlf::harness::{evaluate_error, learning_curve, run_experiment};
use rlf::predict::predict_proba;
use rlf::residual::{compute_leaf_residual, solve_leaf_residual};
use rlf::synthetic::GaussianMixture;
use rlf::train::{train_forest, train_tree, training_loss, update_priors, RlfTrainer};
use rlf::{cross_entropy_loss, Dataset, ModelKind, PriorState, TrainConfig};

fn small() -> Dataset<f64> {
    GaussianMixture::new(3, 5, 2, 1.5, 11).sample(240, 3)
}

#[test]
fn training_posteriors_match_inference() {
    let data = small();
    let cfg = TrainConfig { num_trees: 6, max_depth: 5, ..Default::default() };
    let mut trainer = RlfTrainer::new(&data, &cfg).unwrap();
    for _ in 0..cfg.num_trees {
        trainer.step().unwrap();
    }
    let prior = trainer.prior().clone();
    let forest = trainer.into_forest();
    for n in 0..data.len() {
        let p = predict_proba(&forest, data.row(n)).unwrap();
        for (a, b) in p.iter().zip(prior.posterior(n)) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn reported_loss_is_cross_entropy_of_predictions() {
    let data = small();
    let cfg = TrainConfig { num_trees: 4, max_depth: 4, ..Default::default() };
    let (forest, trace) = train_forest(&data, &cfg).unwrap();
    let flat: Vec<f64> = data.rows().flat_map(|x| predict_proba(&forest, x).unwrap()).collect();
    let loss = cross_entropy_loss(&flat, 3, data.labels()).unwrap();
    assert!((loss - trace[3]).abs() < 1e-9 * loss.max(1.0));
}

#[test]
fn tree_is_invariant_to_per_row_prior_offsets() {
    let data = small();
    let cfg = TrainConfig { max_depth: 5, ..Default::default() };
    let mut prior = PriorState::<f64>::uniform(data.len(), 3);
    let first = train_tree(&data, &prior, &cfg, 0).unwrap();
    update_priors(&mut prior, &first, &data).unwrap();
    let shifted: Vec<f64> = prior
        .log_prior()
        .chunks(3)
        .enumerate()
        .flat_map(|(n, row)| row.iter().map(move |v| v + (n % 7) as f64 * 0.25).collect::<Vec<_>>())
        .collect();
    let shifted = PriorState::from_log_prior(shifted, 3).unwrap();
    let (a, b) = (train_tree(&data, &prior, &cfg, 1).unwrap(), train_tree(&data, &shifted, &cfg, 1).unwrap());
    assert_eq!(a.nodes(), b.nodes());
    for (x, y) in a.leaf_values().iter().zip(b.leaf_values()) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn prior_updates_commute() {
    let data = small();
    let cfg = TrainConfig { max_depth: 4, ..Default::default() };
    let base = PriorState::<f64>::uniform(data.len(), 3);
    let a = train_tree(&data, &base, &cfg, 0).unwrap();
    let b = train_tree(&data, &base, &cfg, 1).unwrap();
    let (mut ab, mut ba) = (base.clone(), base);
    update_priors(&mut ab, &a, &data).unwrap();
    update_priors(&mut ab, &b, &data).unwrap();
    update_priors(&mut ba, &b, &data).unwrap();
    update_priors(&mut ba, &a, &data).unwrap();
    for (x, y) in ab.log_prior().iter().zip(ba.log_prior()) {
        assert!((x - y).abs() < 1e-12);
    }
    assert!((training_loss(&ab, &data).unwrap() - training_loss(&ba, &data).unwrap()).abs() < 1e-9);
}

#[test]
fn single_precision_training_runs() {
    let g = GaussianMixture::new(2, 3, 1, 3.0, 1).sample(200, 1);
    let data: Dataset<f32> =
        Dataset::new(g.features().iter().map(|&v| v as f32).collect(), g.labels().to_vec(), 3, 2).unwrap();
    let cfg = TrainConfig { num_trees: 5, max_depth: 4, ..Default::default() };
    let (forest, trace) = train_forest(&data, &cfg).unwrap();
    assert!(trace.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-5)));
    assert!(evaluate_error(&forest, &data).unwrap() < 0.1);
}

#[test]
fn single_cell_curve_matches_run_experiment() {
    let g = GaussianMixture::new(3, 4, 2, 1.5, 2);
    let (train, test) = (g.sample(150, 1), g.sample(90, 2));
    let cfg = TrainConfig { num_trees: 3, max_depth: 4, seed: 5, ..Default::default() };
    for kind in [ModelKind::Rlf, ModelKind::Rf] {
        let single = run_experiment(&train, &test, &cfg, kind, 3).unwrap();
        let curve = learning_curve(&train, &test, &cfg, kind, &[3], &[4], 3).unwrap();
        assert_eq!(curve.len(), 1);
        assert_eq!(curve[0].result.errors, single.errors);
        assert_eq!(curve[0].result.leaf_counts, single.leaf_counts);
    }
}

#[test]
fn more_trees_do_not_raise_training_error() {
    let data = small();
    let cfg = TrainConfig { max_depth: 3, residual_iterations: 20, ..Default::default() };
    let curve = learning_curve(&data, &data, &cfg, ModelKind::Rlf, &[1, 30], &[3], 2).unwrap();
    assert!(curve[1].result.mean_error <= curve[0].result.mean_error);
}

/// Log-priors of probabilities in [0.01, 1).
fn leaf_strategy() -> impl Strategy<Value = (usize, Vec<f64>, Vec<usize>)> {
    (2usize..=4, 1usize..=12).prop_flat_map(|(nc, m)| {
        (
            Just(nc),
            prop::collection::vec(0.01f64..1.0, m * nc).prop_map(|p| p.iter().map(|v| v.ln()).collect()),
            prop::collection::vec(0..nc, m),
        )
    })
}

proptest! {
    #[test]
    fn converged_residual_balances_class_mass((nc, priors, labels) in leaf_strategy()) {
        let q = solve_leaf_residual(&priors, &labels, nc, 2000).unwrap();
        let mut mass = vec![0.0; nc];
        for (row, _) in priors.chunks(nc).zip(&labels) {
            let w: Vec<f64> = row.iter().zip(&q).map(|(p, r)| p.exp() * r).collect();
            let total: f64 = w.iter().sum();
            for (m, v) in mass.iter_mut().zip(&w) {
                *m += v / total;
            }
        }
        for j in 0..nc {
            let count = labels.iter().filter(|&&y| y == j).count() as f64;
            if count > 0.0 {
                prop_assert!((mass[j] - count).abs() <= 1e-6 * count.max(1.0), "class {j}: {} vs {count}", mass[j]);
            }
        }
    }

    #[test]
    fn floored_residual_is_bounded_below((nc, priors, labels) in leaf_strategy(), iters in 1usize..8) {
        let eps = 1e-4;
        let lq = compute_leaf_residual(&priors, &labels, nc, iters, eps).unwrap();
        prop_assert!(lq.iter().all(|v| v.is_finite() && *v >= eps.ln() - 1e-12));
        for j in 0..nc {
            if !labels.contains(&j) {
                prop_assert!((lq[j] - eps.ln()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn one_step_under_uniform_priors(counts in prop::collection::vec(0usize..15, 2..6), offset in -3.0f64..3.0) {
        prop_assume!(counts.iter().sum::<usize>() > 0);
        let nc = counts.len();
        let labels: Vec<usize> = counts.iter().enumerate().flat_map(|(j, &c)| std::iter::repeat_n(j, c)).collect();
        let priors = vec![offset; labels.len() * nc];
        let q = solve_leaf_residual(&priors, &labels, nc, 1).unwrap();
        for j in 0..nc {
            prop_assert_eq!(q[j], (nc * counts[j]) as f64 / labels.len() as f64);
        }
    }
}
