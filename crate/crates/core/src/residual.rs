//! Closed-form residual likelihoods for one leaf.
//!
//! Given the ensemble's prior over the samples in a leaf, the residual `q`
//! that minimizes the leaf's cross-entropy satisfies, for every class `j`,
//! `N_j = sum_n P+[n, j]` where `P+[n, .]` is the prior row times `q`,
//! normalized. Starting from `q = 1` the multiplicative update
//!
//! ```text
//! q_j <- q_j * N_j / sum_n P+[n, j]
//! ```
//!
//! moves toward that point. Since `P+[n, j]` carries a factor of `q_j`, the
//! update is evaluated as `q_j <- N_j / sum_n (e[n, j] / s_n)` with
//! `e[n, .]` the max-shifted prior row and `s_n = sum_k e[n, k] q_k`. The sum
//! is taken relative to the first member's `s` so that uniform priors give
//! `q_j = N_c * N_j / M` with a single rounding.
//!
//! When the linear-domain iterate leaves the comfortable floating-point range
//! (priors spanning hundreds of nats), the solve restarts in the log domain.

use crate::error::{Error, Result};
use crate::model::PriorState;
use crate::scalar::Scalar;

/// Per-sample prior rows prepared for repeated leaf solves: each row shifted
/// so its maximum is zero, its exponentials, and the loss each sample incurs
/// under the prior alone.
#[derive(Debug, Clone)]
pub struct PriorSnapshot<T> {
    num_classes: usize,
    log: Vec<T>,
    exp: Vec<T>,
    neutral_loss: Vec<T>,
}

impl<T: Scalar> PriorSnapshot<T> {
    /// Prepares the rows of `prior` for samples labelled by `labels`.
    pub fn new(prior: &PriorState<T>, labels: &[usize]) -> Result<Self> {
        if prior.num_samples() != labels.len() {
            return Err(Error::validation(format!(
                "prior state has {} rows, dataset has {} samples",
                prior.num_samples(),
                labels.len()
            )));
        }
        Self::from_log_rows(prior.log_prior(), prior.num_classes(), labels)
    }

    pub(crate) fn from_log_rows(rows: &[T], num_classes: usize, labels: &[usize]) -> Result<Self> {
        if num_classes < 2 || rows.len() != labels.len() * num_classes {
            return Err(Error::validation(format!(
                "log-prior matrix of {} values does not match {} samples x {num_classes} classes",
                rows.len(),
                labels.len()
            )));
        }
        if rows.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("non-finite log-prior entry"));
        }
        if labels.iter().any(|&y| y >= num_classes) {
            return Err(Error::validation("label outside the class range"));
        }
        let mut log = rows.to_vec();
        let mut exp = vec![T::zero(); rows.len()];
        let mut neutral_loss = Vec::with_capacity(labels.len());
        for ((lrow, erow), &y) in log.chunks_exact_mut(num_classes).zip(exp.chunks_exact_mut(num_classes)).zip(labels) {
            let max = lrow.iter().copied().fold(T::neg_infinity(), T::max);
            let mut sum = T::zero();
            for (l, e) in lrow.iter_mut().zip(erow.iter_mut()) {
                *l = *l - max;
                *e = l.exp();
                sum = sum + *e;
            }
            neutral_loss.push(sum.ln() - lrow[y]);
        }
        Ok(PriorSnapshot { num_classes, log, exp, neutral_loss })
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_samples(&self) -> usize {
        self.neutral_loss.len()
    }

    #[inline]
    fn log_row(&self, n: usize) -> &[T] {
        &self.log[n * self.num_classes..(n + 1) * self.num_classes]
    }

    #[inline]
    fn exp_row(&self, n: usize) -> &[T] {
        &self.exp[n * self.num_classes..(n + 1) * self.num_classes]
    }

    /// Loss of `members` with no residual applied.
    pub fn neutral_loss(&self, members: &[usize]) -> T {
        members.iter().map(|&n| self.neutral_loss[n]).sum()
    }

    /// Loss of `members` after adding `log_residual` to their prior rows.
    pub fn leaf_loss(&self, members: &[usize], labels: &[usize], log_residual: &[T]) -> T {
        let mut total = T::zero();
        for &n in members {
            let row = self.log_row(n);
            let mut max = T::neg_infinity();
            for (l, r) in row.iter().zip(log_residual) {
                max = max.max(*l + *r);
            }
            let mut sum = T::zero();
            for (l, r) in row.iter().zip(log_residual) {
                sum = sum + (*l + *r - max).exp();
            }
            let y = labels[n];
            total = total + sum.ln() + max - (row[y] + log_residual[y]);
        }
        total
    }

    /// Runs `iterations` fixed-point updates from `q = 1` over `members`.
    pub(crate) fn solve(&self, members: &[usize], labels: &[usize], iterations: usize) -> RawResidual<T> {
        let counts = class_counts(members, labels, self.num_classes);
        match self.solve_linear(members, &counts, iterations) {
            Some(q) => RawResidual::Linear(q),
            None => RawResidual::Log(self.solve_log(members, &counts, iterations)),
        }
    }

    fn solve_linear(&self, members: &[usize], counts: &[usize], iterations: usize) -> Option<Vec<T>> {
        let nc = self.num_classes;
        let lo = T::min_positive_value().sqrt();
        let hi = T::max_value().sqrt();
        let mut q = vec![T::one(); nc];
        let mut denom = vec![T::zero(); nc];
        for _ in 0..iterations {
            denom.iter_mut().for_each(|d| *d = T::zero());
            let mut s_ref = None;
            for &n in members {
                let e = self.exp_row(n);
                let s: T = e.iter().zip(&q).fold(T::zero(), |acc, (a, b)| acc + *a * *b);
                if !(s >= lo && s <= hi) {
                    return None;
                }
                let s_ref = *s_ref.get_or_insert(s);
                let ratio = s_ref / s;
                for (d, &ej) in denom.iter_mut().zip(e) {
                    *d = *d + ej * ratio;
                }
            }
            let s_ref = s_ref?;
            for j in 0..nc {
                if counts[j] == 0 {
                    q[j] = T::zero();
                    continue;
                }
                let v = T::count(counts[j]) * s_ref / denom[j];
                if !(v >= lo && v <= hi) {
                    return None;
                }
                q[j] = v;
            }
        }
        Some(q)
    }

    fn solve_log(&self, members: &[usize], counts: &[usize], iterations: usize) -> Vec<T> {
        let nc = self.num_classes;
        let mut lq = vec![T::zero(); nc];
        let mut shifted = vec![T::zero(); nc];
        // Per class: running (max, scaled sum) of log(e[n, j] / s_n).
        let mut acc = vec![(T::neg_infinity(), T::zero()); nc];
        for _ in 0..iterations {
            acc.iter_mut().for_each(|a| *a = (T::neg_infinity(), T::zero()));
            for &n in members {
                let row = self.log_row(n);
                for ((s, l), q) in shifted.iter_mut().zip(row).zip(&lq) {
                    *s = *l + *q;
                }
                let ls = crate::loss::log_sum_exp(&shifted);
                for (a, &l) in acc.iter_mut().zip(row) {
                    let v = l - ls;
                    if v > a.0 {
                        a.1 = a.1 * (a.0 - v).exp() + T::one();
                        a.0 = v;
                    } else {
                        a.1 = a.1 + (v - a.0).exp();
                    }
                }
            }
            for j in 0..nc {
                lq[j] = if counts[j] == 0 {
                    T::neg_infinity()
                } else {
                    T::count(counts[j]).ln() - (acc[j].0 + acc[j].1.ln())
                };
            }
        }
        lq
    }

    /// Fitted, floored log-residual for `members` and the leaf loss it gives.
    pub(crate) fn fit(&self, members: &[usize], labels: &[usize], iterations: usize, epsilon: T) -> LeafFit<T> {
        if members.is_empty() {
            return LeafFit { log_residual: vec![T::zero(); self.num_classes], loss: T::zero() };
        }
        let log_residual = self.solve(members, labels, iterations).floored_log(epsilon);
        let loss = self.leaf_loss(members, labels, &log_residual);
        LeafFit { log_residual, loss }
    }
}

/// Unfloored residual, in whichever domain the solve finished.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum RawResidual<T> {
    Linear(Vec<T>),
    Log(Vec<T>),
}

impl<T: Scalar> RawResidual<T> {
    pub(crate) fn linear(self) -> Vec<T> {
        match self {
            RawResidual::Linear(q) => q,
            RawResidual::Log(lq) => lq.into_iter().map(T::exp).collect(),
        }
    }

    pub(crate) fn floored_log(self, epsilon: T) -> Vec<T> {
        match self {
            RawResidual::Linear(q) => q.into_iter().map(|v| v.max(epsilon).ln()).collect(),
            RawResidual::Log(lq) => {
                let floor = epsilon.ln();
                lq.into_iter().map(|v| v.max(floor)).collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct LeafFit<T> {
    pub log_residual: Vec<T>,
    pub loss: T,
}

fn class_counts(members: &[usize], labels: &[usize], num_classes: usize) -> Vec<usize> {
    let mut counts = vec![0; num_classes];
    for &n in members {
        counts[labels[n]] += 1;
    }
    counts
}

fn check_leaf_inputs<T: Scalar>(
    member_log_priors: &[T],
    member_labels: &[usize],
    num_classes: usize,
    iterations: usize,
) -> Result<()> {
    if member_labels.is_empty() {
        return Err(Error::validation("leaf residual needs at least one member"));
    }
    if iterations == 0 {
        return Err(Error::validation("residual iterations must be at least 1"));
    }
    if member_log_priors.len() != member_labels.len() * num_classes {
        return Err(Error::validation("member prior matrix does not match member labels"));
    }
    Ok(())
}

/// Residual after `iterations` fixed-point updates from `q = 1`, in the
/// linear domain and before flooring. Absent classes get exactly zero.
///
/// `member_log_priors` is a row-major `M x num_classes` matrix of log-priors,
/// each row defined up to an additive constant.
pub fn solve_leaf_residual<T: Scalar>(
    member_log_priors: &[T],
    member_labels: &[usize],
    num_classes: usize,
    iterations: usize,
) -> Result<Vec<T>> {
    check_leaf_inputs(member_log_priors, member_labels, num_classes, iterations)?;
    let snap = PriorSnapshot::from_log_rows(member_log_priors, num_classes, member_labels)?;
    let members: Vec<usize> = (0..member_labels.len()).collect();
    Ok(snap.solve(&members, member_labels, iterations).linear())
}

/// Leaf residual as stored in a tree: the result of
/// [`solve_leaf_residual`] floored at `epsilon` and returned as natural logs.
pub fn compute_leaf_residual<T: Scalar>(
    member_log_priors: &[T],
    member_labels: &[usize],
    num_classes: usize,
    iterations: usize,
    epsilon: T,
) -> Result<Vec<T>> {
    check_leaf_inputs(member_log_priors, member_labels, num_classes, iterations)?;
    if !(epsilon > T::zero() && epsilon.is_finite()) {
        return Err(Error::validation("epsilon must be positive"));
    }
    let snap = PriorSnapshot::from_log_rows(member_log_priors, num_classes, member_labels)?;
    let members: Vec<usize> = (0..member_labels.len()).collect();
    Ok(snap.solve(&members, member_labels, iterations).floored_log(epsilon))
}
