use std::io::Read;
use std::path::Path;

use super::{assemble, open, LoadOptions};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Reads a rectangular numeric CSV. Column `label_column` holds the class;
/// the remaining columns, in order, are the features. A first row that does
/// not parse as numbers is treated as a header and skipped.
pub fn read_csv<T: Scalar, R: Read>(reader: R, label_column: usize, options: &LoadOptions) -> Result<Dataset<T>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(reader);
    let mut width = None;
    let mut features = Vec::new();
    let mut raw_labels = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(i + 1, |p| p.line() as usize);
            Error::parse(line, e.to_string())
        })?;
        let line = record.position().map_or(i + 1, |p| p.line() as usize);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let parsed: Vec<Option<f64>> = record.iter().map(|f| f.parse::<f64>().ok().filter(|v| v.is_finite())).collect();
        if i == 0 && parsed.iter().any(Option::is_none) {
            continue;
        }
        let w = *width.get_or_insert(record.len());
        if record.len() != w {
            return Err(Error::parse(line, format!("expected {w} fields, found {}", record.len())));
        }
        if label_column >= w {
            return Err(Error::validation(format!("label column {label_column} out of range for {w} columns")));
        }
        if w < 2 {
            return Err(Error::validation("CSV needs a label column and at least one feature"));
        }
        for (j, v) in parsed.into_iter().enumerate() {
            let v = v.ok_or_else(|| Error::parse(line, format!("non-numeric value '{}' in column {j}", &record[j])))?;
            if j == label_column {
                raw_labels.push(v);
            } else {
                features.push(v);
            }
        }
    }
    let d = width.map_or(0, |w| w - 1);
    if let Some(want) = options.feature_dim {
        if want != d && !raw_labels.is_empty() {
            return Err(Error::validation(format!("CSV has {d} features, expected {want}")));
        }
    }
    assemble(features, &raw_labels, d.max(1), options)
}

pub fn load_csv<T: Scalar>(path: impl AsRef<Path>, label_column: usize, options: &LoadOptions) -> Result<Dataset<T>> {
    read_csv(open(path)?, label_column, options)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str, col: usize) -> Result<Dataset<f64>> {
        read_csv(s.as_bytes(), col, &LoadOptions::default())
    }

    #[test]
    fn numeric_grid() {
        let ds = parse("0,1.5,2\n1,3,4\n0,5,6\n", 0).unwrap();
        assert_eq!((ds.len(), ds.feature_dim()), (3, 2));
        assert_eq!(ds.row(1), &[3.0, 4.0]);
        assert_eq!(ds.labels(), &[0, 1, 0]);
    }

    #[test]
    fn header_is_skipped_and_label_column_can_be_last() {
        let ds = parse("a,b,class\n1,2,5\n3,4,9\n", 2).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.row(0), &[1.0, 2.0]);
        assert_eq!(ds.labels(), &[0, 1]);
    }

    #[test]
    fn ragged_rows_report_row_number() {
        match parse("0,1,2\n1,2\n", 0) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn label_column_out_of_range() {
        assert!(matches!(parse("0,1,2\n1,2,3\n", 3), Err(Error::Validation(_))));
    }

    #[test]
    fn non_numeric_body_value() {
        assert!(matches!(parse("0,1\n1,x\n", 0), Err(Error::Parse { line: 2, .. })));
    }
}
