use rand::seq::SliceRandom;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::{keyed, Purpose};
use crate::scalar::Scalar;

/// How many rows of each class to keep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Subsample {
    /// `round(fraction * class size)` rows per class, `0 < fraction <= 1`.
    Fraction(f64),
    /// At most this many rows per class.
    PerClassCap(usize),
}

/// Per-class sampling without replacement. Kept rows retain their original order.
pub fn stratified_subsample<T: Scalar>(dataset: &Dataset<T>, rule: Subsample, seed: u64) -> Result<Dataset<T>> {
    match rule {
        Subsample::Fraction(f) if !(f > 0.0 && f <= 1.0) => {
            return Err(Error::validation(format!("subsample fraction {f} outside (0, 1]")))
        }
        Subsample::PerClassCap(0) => return Err(Error::validation("per-class cap must be at least 1")),
        _ => {}
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); dataset.num_classes()];
    for (n, &c) in dataset.labels().iter().enumerate() {
        by_class[c].push(n);
    }
    let mut keep = Vec::new();
    for (class, mut ids) in by_class.into_iter().enumerate() {
        if ids.is_empty() {
            continue;
        }
        let k = match rule {
            Subsample::Fraction(f) => (f * ids.len() as f64).round() as usize,
            Subsample::PerClassCap(cap) => cap,
        }
        .min(ids.len());
        if k == 0 {
            return Err(Error::validation(format!("subsample keeps no rows of class {class}")));
        }
        ids.shuffle(&mut keyed(seed, &[Purpose::Subsample as u64, class as u64]));
        keep.extend_from_slice(&ids[..k]);
    }
    keep.sort_unstable();
    Ok(dataset.select(&keep))
}
