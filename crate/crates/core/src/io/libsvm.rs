use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use super::{assemble, open, LoadOptions};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Parses `<label> <index>:<value> ...` lines with 1-based indices.
///
/// Blank lines and `#` comments are skipped. Missing indices read as 0.
pub fn read_libsvm<T: Scalar, R: Read>(reader: R, options: &LoadOptions) -> Result<Dataset<T>> {
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut raw_labels = Vec::new();
    let mut max_index = 0;
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let label_tok = tokens.next().expect("non-empty line has a token");
        let label: f64 = label_tok.parse().map_err(|_| Error::parse(lineno, format!("invalid label '{label_tok}'")))?;
        if !label.is_finite() {
            return Err(Error::parse(lineno, format!("non-finite label '{label_tok}'")));
        }
        let mut row = Vec::new();
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| Error::parse(lineno, format!("expected index:value, got '{tok}'")))?;
            let idx: usize = idx
                .parse()
                .ok()
                .filter(|&i| i >= 1)
                .ok_or_else(|| Error::parse(lineno, format!("invalid feature index '{idx}'")))?;
            let val: f64 = val
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| Error::parse(lineno, format!("invalid feature value '{val}'")))?;
            max_index = max_index.max(idx);
            row.push((idx - 1, val));
        }
        rows.push(row);
        raw_labels.push(label);
    }
    let d = match options.feature_dim {
        Some(d) if d < max_index => {
            return Err(Error::validation(format!("feature index {max_index} exceeds the requested dimension {d}")))
        }
        Some(d) => d,
        None => max_index.max(1),
    };
    let mut features = vec![0.0; rows.len() * d];
    for (n, row) in rows.iter().enumerate() {
        for &(j, v) in row {
            features[n * d + j] = v;
        }
    }
    assemble(features, &raw_labels, d, options)
}

pub fn load_libsvm<T: Scalar>(path: impl AsRef<Path>, options: &LoadOptions) -> Result<Dataset<T>> {
    read_libsvm(open(path)?, options)
}
