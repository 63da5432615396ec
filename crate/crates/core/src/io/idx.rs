use std::io::Read;
use std::path::Path;

use super::{assemble, open, LoadOptions};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

fn be_u32(bytes: &[u8], at: usize, what: &str) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes(b.try_into().expect("4 bytes")))
        .ok_or_else(|| Error::format(format!("{what}: truncated header")))
}

/// Reads an IDX image file and its label file. Pixels are divided by 255 and
/// each image is flattened row-major.
pub fn read_idx<T: Scalar, R1: Read, R2: Read>(
    mut images: R1,
    mut labels: R2,
    options: &LoadOptions,
) -> Result<Dataset<T>> {
    let mut img = Vec::new();
    images.read_to_end(&mut img)?;
    let mut lab = Vec::new();
    labels.read_to_end(&mut lab)?;

    let magic = be_u32(&img, 0, "images")?;
    if magic != IMAGES_MAGIC {
        return Err(Error::format(format!("images: magic {magic:#010x}, expected {IMAGES_MAGIC:#010x}")));
    }
    let count = be_u32(&img, 4, "images")? as usize;
    let rows = be_u32(&img, 8, "images")? as usize;
    let cols = be_u32(&img, 12, "images")? as usize;
    let d = rows * cols;
    if d == 0 {
        return Err(Error::format("images: zero-sized images"));
    }
    let pixels = img
        .get(16..)
        .filter(|p| p.len() == count * d)
        .ok_or_else(|| Error::format(format!("images: body is not {count} x {rows} x {cols} bytes")))?;

    let magic = be_u32(&lab, 0, "labels")?;
    if magic != LABELS_MAGIC {
        return Err(Error::format(format!("labels: magic {magic:#010x}, expected {LABELS_MAGIC:#010x}")));
    }
    let label_count = be_u32(&lab, 4, "labels")? as usize;
    if label_count != count {
        return Err(Error::format(format!("{count} images but {label_count} labels")));
    }
    let raw = lab
        .get(8..)
        .filter(|b| b.len() == count)
        .ok_or_else(|| Error::format(format!("labels: body is not {count} bytes")))?;

    let features = pixels.iter().map(|&p| f64::from(p) / 255.0).collect();
    let raw_labels: Vec<f64> = raw.iter().map(|&b| f64::from(b)).collect();
    if let Some(want) = options.feature_dim {
        if want != d {
            return Err(Error::validation(format!("images have {d} pixels, expected {want}")));
        }
    }
    assemble(features, &raw_labels, d, options)
}

pub fn load_idx<T: Scalar>(
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
    options: &LoadOptions,
) -> Result<Dataset<T>> {
    read_idx(open(images_path)?, open(labels_path)?, options)
}
