//! Dataset loaders, the binary model container and atomic file output.

mod delimited;
mod idx;
mod libsvm;
mod model_file;
mod subsample;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

pub use delimited::{load_csv, read_csv};
pub use idx::{load_idx, read_idx};
pub use libsvm::{load_libsvm, read_libsvm};
pub use model_file::{load_model, read_model, save_model, serialized_size, write_model, MAGIC};
pub use subsample::{stratified_subsample, Subsample};

use crate::dataset::{Dataset, LabelMap};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Overrides applied while loading a dataset. Evaluation data should reuse
/// the training set's label map and feature dimension.
#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    pub feature_dim: Option<usize>,
    /// Minimum class count; the loaded count is the larger of this and the map size.
    pub num_classes: Option<usize>,
    pub label_map: Option<LabelMap>,
}

impl LoadOptions {
    /// Options that make a second file line up with `reference`.
    pub fn matching<T: Scalar>(reference: &Dataset<T>) -> Self {
        LoadOptions {
            feature_dim: Some(reference.feature_dim()),
            num_classes: Some(reference.num_classes()),
            label_map: reference.label_map().cloned(),
        }
    }
}

pub(crate) fn assemble<T: Scalar>(
    features: Vec<f64>,
    raw_labels: &[f64],
    feature_dim: usize,
    options: &LoadOptions,
) -> Result<Dataset<T>> {
    if raw_labels.is_empty() {
        return Err(Error::validation("dataset contains no samples"));
    }
    let map = match &options.label_map {
        Some(m) => m.clone(),
        None => LabelMap::from_raw(raw_labels)?,
    };
    let labels = map.encode(raw_labels)?;
    let num_classes = map.len().max(options.num_classes.unwrap_or(0));
    if num_classes < 2 {
        return Err(Error::validation(format!("dataset has {num_classes} class(es); at least 2 are required")));
    }
    let features = features
        .into_iter()
        .map(|v| T::from_f64(v).filter(|x| x.is_finite()))
        .collect::<Option<Vec<T>>>()
        .ok_or_else(|| Error::validation("feature value not representable in the scalar type"))?;
    Dataset::new(features, labels, feature_dim, num_classes)?.with_label_map(map)
}

/// Writes `path` through a temporary file in the same directory and renames
/// it into place, so a failure never leaves a partial file behind.
pub fn write_atomic<F>(path: impl AsRef<Path>, write: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    let path = path.as_ref();
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        write(&mut w)?;
        w.flush()?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub(crate) fn open(path: impl AsRef<Path>) -> Result<File> {
    Ok(File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_leaves_nothing_on_failure() {
        let dir = tempfile::tempdir().unwrap();
        let target = dir.path().join("out.bin");
        let err = write_atomic(&target, |w| {
            w.write_all(b"partial")?;
            Err(Error::validation("boom"))
        });
        assert!(err.is_err());
        assert!(!target.exists());
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
        write_atomic(&target, |w| Ok(w.write_all(b"ok")?)).unwrap();
        assert_eq!(std::fs::read(&target).unwrap(), b"ok");
    }
}
