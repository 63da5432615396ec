//! Dense feature matrix plus dense class labels.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Mapping from dense class indices back to the label values found in a file.
///
/// Raw labels are sorted ascending; class `i` is `values()[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMap {
    values: Vec<f64>,
}

impl LabelMap {
    /// Builds a map from raw labels, densifying them in ascending order.
    pub fn from_raw(raw: &[f64]) -> Result<Self> {
        if let Some(bad) = raw.iter().find(|v| !v.is_finite()) {
            return Err(Error::validation(format!("non-finite label {bad}")));
        }
        let mut values = raw.to_vec();
        values.sort_by(|a, b| a.total_cmp(b));
        values.dedup();
        Ok(LabelMap { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Dense index of a raw label, if it was seen when the map was built.
    pub fn index_of(&self, raw: f64) -> Option<usize> {
        self.values.binary_search_by(|v| v.total_cmp(&raw)).ok()
    }

    /// Densifies every raw label; unseen labels are an error.
    pub fn encode(&self, raw: &[f64]) -> Result<Vec<usize>> {
        raw.iter()
            .map(|&r| self.index_of(r).ok_or_else(|| Error::validation(format!("label {r} not present in label map"))))
            .collect()
    }
}

/// Training or evaluation data: `N` rows of `d` features and one class per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    features: Vec<T>,
    labels: Vec<usize>,
    num_classes: usize,
    feature_dim: usize,
    label_map: Option<LabelMap>,
}

impl<T: Scalar> Dataset<T> {
    /// Builds a dataset from row-major features.
    ///
    /// `features.len()` must equal `labels.len() * feature_dim`. Every label
    /// must be below `num_classes`, `num_classes >= 2`, `feature_dim >= 1`,
    /// and every feature value must be finite. Zero rows are allowed.
    pub fn new(features: Vec<T>, labels: Vec<usize>, feature_dim: usize, num_classes: usize) -> Result<Self> {
        if feature_dim == 0 {
            return Err(Error::validation("feature_dim must be at least 1"));
        }
        if num_classes < 2 {
            return Err(Error::validation(format!("num_classes must be at least 2, got {num_classes}")));
        }
        if features.len() != labels.len() * feature_dim {
            return Err(Error::validation(format!(
                "feature matrix has {} values, expected {} rows x {} features",
                features.len(),
                labels.len(),
                feature_dim
            )));
        }
        if let Some((n, &c)) = labels.iter().enumerate().find(|(_, &c)| c >= num_classes) {
            return Err(Error::validation(format!("label {c} of row {n} is outside [0, {num_classes})")));
        }
        if let Some(i) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::validation(format!(
                "non-finite feature value at row {}, column {}",
                i / feature_dim,
                i % feature_dim
            )));
        }
        Ok(Dataset { features, labels, num_classes, feature_dim, label_map: None })
    }

    /// Attaches the raw-label mapping a loader used to densify labels.
    pub fn with_label_map(mut self, map: LabelMap) -> Result<Self> {
        if map.len() > self.num_classes {
            return Err(Error::validation(format!(
                "label map has {} entries but dataset has {} classes",
                map.len(),
                self.num_classes
            )));
        }
        self.label_map = Some(map);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, n: usize) -> usize {
        self.labels[n]
    }

    pub fn label_map(&self) -> Option<&LabelMap> {
        self.label_map.as_ref()
    }

    /// Row-major feature matrix.
    pub fn features(&self) -> &[T] {
        &self.features
    }

    #[inline]
    pub fn row(&self, n: usize) -> &[T] {
        &self.features[n * self.feature_dim..(n + 1) * self.feature_dim]
    }

    #[inline]
    pub fn value(&self, n: usize, feature: usize) -> T {
        self.features[n * self.feature_dim + feature]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[T]> + '_ {
        self.features.chunks_exact(self.feature_dim)
    }

    /// Number of rows per class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &c in &self.labels {
            counts[c] += 1;
        }
        counts
    }

    /// New dataset holding the given rows, in the given order (repeats allowed).
    pub fn select(&self, rows: &[usize]) -> Dataset<T> {
        let mut features = Vec::with_capacity(rows.len() * self.feature_dim);
        for &n in rows {
            features.extend_from_slice(self.row(n));
        }
        Dataset {
            features,
            labels: rows.iter().map(|&n| self.labels[n]).collect(),
            num_classes: self.num_classes,
            feature_dim: self.feature_dim,
            label_map: self.label_map.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_label() {
        let err = Dataset::new(vec![0.0f64, 1.0], vec![0, 2], 1, 2).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn rejects_non_finite_features() {
        assert!(Dataset::new(vec![0.0f64, f64::NAN], vec![0, 1], 1, 2).is_err());
        assert!(Dataset::new(vec![f32::INFINITY], vec![0], 1, 2).is_err());
    }

    #[test]
    fn num_classes_may_exceed_observed_classes() {
        let ds = Dataset::new(vec![0.0f64, 1.0], vec![0, 0], 1, 5).unwrap();
        assert_eq!(ds.class_counts(), vec![2, 0, 0, 0, 0]);
    }

    #[test]
    fn rejects_shape_mismatch() {
        assert!(Dataset::new(vec![0.0f64; 5], vec![0, 1], 2, 2).is_err());
        assert!(Dataset::new(vec![0.0f64; 2], vec![0, 1], 0, 2).is_err());
        assert!(Dataset::new(vec![0.0f64; 2], vec![0, 0], 1, 1).is_err());
    }

    #[test]
    fn label_map_densifies_sorted() {
        let map = LabelMap::from_raw(&[7.0, 2.0, 7.0, 2.0]).unwrap();
        assert_eq!(map.values(), &[2.0, 7.0]);
        assert_eq!(map.encode(&[2.0, 7.0, 7.0, 2.0]).unwrap(), vec![0, 1, 1, 0]);
        assert!(map.encode(&[3.0]).is_err());
    }

    #[test]
    fn select_repeats_rows() {
        let ds = Dataset::new(vec![1.0f64, 2.0, 3.0, 4.0], vec![0, 1], 2, 2).unwrap();
        let sub = ds.select(&[1, 1, 0]);
        assert_eq!(sub.features(), &[3.0, 4.0, 3.0, 4.0, 1.0, 2.0]);
        assert_eq!(sub.labels(), &[1, 1, 0]);
    }
}
