//! Log-domain normalization and the cross-entropy loss.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `ln(sum(exp(v)))`, shifted by the maximum so large inputs do not overflow.
///
/// Entries of `-inf` contribute nothing; an all `-inf` slice returns `-inf`.
pub fn log_sum_exp<T: Scalar>(v: &[T]) -> T {
    let max = v.iter().copied().fold(T::neg_infinity(), T::max);
    if max == T::neg_infinity() {
        return max;
    }
    let sum: T = v.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}

/// Replaces log-scores with their normalized exponentials. Inputs must be finite.
pub(crate) fn softmax_in_place<T: Scalar>(v: &mut [T]) {
    let max = v.iter().copied().fold(T::neg_infinity(), T::max);
    let mut sum = T::zero();
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum = sum + *x;
    }
    for x in v.iter_mut() {
        *x = *x / sum;
    }
}

/// Turns unnormalized log-scores into a probability vector.
pub fn normalize_posterior<T: Scalar>(log_scores: &[T]) -> Result<Vec<T>> {
    if log_scores.is_empty() {
        return Err(Error::validation("cannot normalize an empty score vector"));
    }
    if let Some(bad) = log_scores.iter().find(|v| !v.is_finite()) {
        return Err(Error::validation(format!("non-finite log-score {bad}")));
    }
    let mut p = log_scores.to_vec();
    softmax_in_place(&mut p);
    Ok(p)
}

/// `-sum_n ln(posterior[n, label_n])` over a row-major `N x num_classes`
/// posterior matrix. Probabilities are clamped at [`Scalar::prob_floor`].
pub fn cross_entropy_loss<T: Scalar>(posteriors: &[T], num_classes: usize, labels: &[usize]) -> Result<T> {
    if num_classes == 0 || posteriors.len() != labels.len() * num_classes {
        return Err(Error::validation(format!(
            "posterior matrix of {} values does not match {} labels x {num_classes} classes",
            posteriors.len(),
            labels.len()
        )));
    }
    let floor = T::prob_floor();
    let mut loss = T::zero();
    for (row, &y) in posteriors.chunks_exact(num_classes).zip(labels) {
        let p = *row.get(y).ok_or_else(|| Error::validation(format!("label {y} outside [0, {num_classes})")))?;
        loss = loss - p.max(floor).ln();
    }
    Ok(loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_and_forced_cases() {
        assert_eq!(normalize_posterior(&[0.0f64, 0.0]).unwrap(), vec![0.5, 0.5]);
        let p = normalize_posterior(&[2f64.ln(), 0.0]).unwrap();
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((p[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn large_scores_do_not_overflow() {
        // (0.2, 0.2, 0.6) confirmed at 50 significant digits.
        let p = normalize_posterior(&[1000.0f64, 1000.0, 1000.0 + 3f64.ln()]).unwrap();
        for (a, b) in p.iter().zip([0.2, 0.2, 0.6]) {
            assert!((a - b).abs() < 1e-12, "{p:?}");
        }
    }

    #[test]
    fn rejects_non_finite() {
        assert!(normalize_posterior(&[0.0f64, f64::NAN]).is_err());
        assert!(normalize_posterior(&[f64::INFINITY, 0.0]).is_err());
    }

    #[test]
    fn loss_examples() {
        assert_eq!(cross_entropy_loss(&[1.0f64, 0.0, 0.0, 1.0], 2, &[0, 1]).unwrap(), 0.0);
        let l = cross_entropy_loss(&[0.5f64; 8], 2, &[0, 1, 1, 0]).unwrap();
        assert!((l - 4.0 * 2f64.ln()).abs() < 1e-12);
        let l = cross_entropy_loss(&[0.25f64, 0.75], 2, &[0]).unwrap();
        assert!((l - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn loss_is_finite_for_zero_probability() {
        let l = cross_entropy_loss(&[0.0f64, 1.0], 2, &[0]).unwrap();
        assert!((l - 1e-300f64.ln().abs()).abs() < 1e-9);
    }

    #[test]
    fn loss_rejects_shape_mismatch() {
        assert!(cross_entropy_loss(&[0.5f64; 3], 2, &[0, 1]).is_err());
    }

    #[test]
    fn log_sum_exp_handles_neg_infinity() {
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY, 0.0]), 0.0);
        assert_eq!(log_sum_exp::<f64>(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
    }

    proptest! {
        #[test]
        fn shift_invariant(v in prop::collection::vec(-50.0f64..50.0, 2..8), c in -500.0f64..500.0) {
            let a = normalize_posterior(&v).unwrap();
            let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
            let b = normalize_posterior(&shifted).unwrap();
            let total: f64 = a.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn loss_non_negative_and_permutation_equivariant(
            rows in prop::collection::vec((prop::collection::vec(0.01f64..1.0, 3), 0usize..3), 1..20),
            rot in 0usize..20,
        ) {
            let mut post = Vec::new();
            let mut labels = Vec::new();
            for (r, y) in &rows {
                let s: f64 = r.iter().sum();
                post.extend(r.iter().map(|v| v / s));
                labels.push(*y);
            }
            let l = cross_entropy_loss(&post, 3, &labels).unwrap();
            prop_assert!(l >= 0.0);
            let k = rot % rows.len();
            let n = rows.len();
            let mut post2 = Vec::new();
            let mut labels2 = Vec::new();
            for i in 0..n {
                let j = (i + k) % n;
                post2.extend_from_slice(&post[j * 3..j * 3 + 3]);
                labels2.push(labels[j]);
            }
            let l2 = cross_entropy_loss(&post2, 3, &labels2).unwrap();
            prop_assert!((l - l2).abs() < 1e-9);
        }

        #[test]
        fn square_root_residuals_recover_distribution(p in prop::collection::vec(0.001f64..1.0, 2..6)) {
            let s: f64 = p.iter().sum();
            let p: Vec<f64> = p.iter().map(|v| v / s).collect();
            let combined: Vec<f64> = p.iter().map(|v| 2.0 * v.sqrt().ln()).collect();
            let out = normalize_posterior(&combined).unwrap();
            for (a, b) in out.iter().zip(&p) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
