//! `RLF1` model container, little-endian throughout.
//!
//! ```text
//! header : magic "RLF1" | kind u8 (0 = RLF, 1 = RF) | trees u32 | classes u32 | features u32
//! tree   : depth u32
//!          (2^depth - 1) x { feature i32 (-1 = inactive) | threshold f64 }
//!          (2^depth x classes) x leaf value f64
//! ```

use std::io::{Read, Write};
use std::path::Path;

use super::{open, write_atomic};
use crate::error::{Error, Result};
use crate::model::{DecisionNode, ForestModel, ModelKind, TreeModel, MAX_DEPTH};
use crate::scalar::Scalar;

pub const MAGIC: [u8; 4] = *b"RLF1";
const HEADER_LEN: usize = 4 + 1 + 4 + 4 + 4;

/// Exact byte length of `forest` in the container format.
pub fn serialized_size<T: Scalar>(forest: &ForestModel<T>) -> usize {
    HEADER_LEN + forest.trees().iter().map(|t| 4 + t.nodes().len() * 12 + t.leaf_values().len() * 8).sum::<usize>()
}

fn to_f64<T: Scalar>(v: T) -> f64 {
    v.to_f64().expect("float converts to f64")
}

pub fn write_model<T: Scalar, W: Write + ?Sized>(forest: &ForestModel<T>, w: &mut W) -> Result<()> {
    let mut buf = Vec::with_capacity(serialized_size(forest));
    buf.extend_from_slice(&MAGIC);
    buf.push(match forest.kind() {
        ModelKind::Rlf => 0,
        ModelKind::Rf => 1,
    });
    for v in [forest.len(), forest.num_classes(), forest.feature_dim()] {
        let v = u32::try_from(v).map_err(|_| Error::validation("model dimension exceeds u32"))?;
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for tree in forest.trees() {
        buf.extend_from_slice(&(tree.depth() as u32).to_le_bytes());
        for node in tree.nodes() {
            let f = node.feature.map_or(-1, |f| f as i32);
            buf.extend_from_slice(&f.to_le_bytes());
            buf.extend_from_slice(&to_f64(node.threshold).to_le_bytes());
        }
        for &v in tree.leaf_values() {
            buf.extend_from_slice(&to_f64(v).to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::format(format!("truncated model: needed {n} bytes at offset {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn i32(&mut self) -> Result<i32> {
        Ok(i32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

fn from_f64<T: Scalar>(v: f64) -> Result<T> {
    T::from_f64(v).ok_or_else(|| Error::format("value not representable"))
}

/// Parses a whole container. Nothing is returned unless every byte checks out.
pub fn read_model<T: Scalar, R: Read>(mut reader: R) -> Result<ForestModel<T>> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    let mut c = Cursor { bytes: &bytes, pos: 0 };
    let magic = c.take(4).map_err(|_| Error::format("file too short for a model header"))?;
    if &magic[..3] != b"RLF" {
        return Err(Error::format("bad magic: not an RLF model file"));
    }
    if magic[3] != MAGIC[3] {
        return Err(Error::format(format!(
            "unsupported model version '{}', expected '{}'",
            magic[3] as char, MAGIC[3] as char
        )));
    }
    let kind = match c.take(1)?[0] {
        0 => ModelKind::Rlf,
        1 => ModelKind::Rf,
        k => return Err(Error::format(format!("unknown model kind byte {k}"))),
    };
    let num_trees = c.u32()? as usize;
    let num_classes = c.u32()? as usize;
    let feature_dim = c.u32()? as usize;
    let mut forest = ForestModel::new(kind, num_classes, feature_dim).map_err(|e| Error::format(e.to_string()))?;
    for t in 0..num_trees {
        let depth = c.u32()? as usize;
        if depth == 0 || depth > MAX_DEPTH {
            return Err(Error::format(format!("tree {t}: depth {depth} outside [1, {MAX_DEPTH}]")));
        }
        let leaves = 1usize << depth;
        // Check the body length before allocating for it.
        let need = (leaves - 1) * 12 + leaves * num_classes * 8;
        if bytes.len() - c.pos < need {
            return Err(Error::format(format!("truncated model: tree {t} needs {need} more bytes")));
        }
        let mut nodes = Vec::with_capacity(leaves - 1);
        for _ in 0..leaves - 1 {
            let f = c.i32()?;
            let threshold = from_f64(c.f64()?)?;
            let feature = match f {
                -1 => None,
                f if f >= 0 && (f as usize) < feature_dim => Some(f as usize),
                f => return Err(Error::format(format!("tree {t}: feature index {f} out of range"))),
            };
            nodes.push(DecisionNode { feature, threshold });
        }
        let values = (0..leaves * num_classes).map(|_| from_f64(c.f64()?)).collect::<Result<Vec<T>>>()?;
        let tree =
            TreeModel::new(depth, num_classes, nodes, values).map_err(|e| Error::format(format!("tree {t}: {e}")))?;
        forest.push(tree).map_err(|e| Error::format(format!("tree {t}: {e}")))?;
    }
    if c.pos != bytes.len() {
        return Err(Error::format(format!("{} trailing bytes after the last tree", bytes.len() - c.pos)));
    }
    Ok(forest)
}

/// Writes `forest` to `path` atomically.
pub fn save_model<T: Scalar>(forest: &ForestModel<T>, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path, |w| write_model(forest, w))
}

pub fn load_model<T: Scalar>(path: impl AsRef<Path>) -> Result<ForestModel<T>> {
    read_model(open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ForestModel<f64> {
        let mut f = ForestModel::new(ModelKind::Rlf, 3, 4).unwrap();
        let nodes = vec![DecisionNode::split(2, 0.25), DecisionNode::inactive(), DecisionNode::split(0, -1.5)];
        let leaves: Vec<f64> = (0..12).map(|i| (i as f64 * 0.37).sin()).collect();
        f.push(TreeModel::new(2, 3, nodes, leaves).unwrap()).unwrap();
        f.push(TreeModel::neutral(1, 3).unwrap()).unwrap();
        f
    }

    #[test]
    fn round_trip_and_size() {
        let f = sample();
        let mut bytes = Vec::new();
        write_model(&f, &mut bytes).unwrap();
        assert_eq!(bytes.len(), serialized_size(&f));
        assert_eq!(&bytes[..4], b"RLF1");
        assert_eq!(read_model::<f64, _>(&bytes[..]).unwrap(), f);
    }

    #[test]
    fn corrupted_magic_and_version() {
        let mut bytes = Vec::new();
        write_model(&sample(), &mut bytes).unwrap();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(read_model::<f64, _>(&bad[..]), Err(Error::Format(m)) if m.contains("magic")));
        let mut v2 = bytes.clone();
        v2[3] = b'2';
        assert!(matches!(read_model::<f64, _>(&v2[..]), Err(Error::Format(m)) if m.contains("version")));
    }

    #[test]
    fn truncation_and_trailing_bytes() {
        let mut bytes = Vec::new();
        write_model(&sample(), &mut bytes).unwrap();
        for cut in [0, 3, 10, 17, 20, bytes.len() - 1] {
            assert!(matches!(read_model::<f64, _>(&bytes[..cut]), Err(Error::Format(_))), "cut {cut}");
        }
        let mut long = bytes.clone();
        long.push(0);
        assert!(matches!(read_model::<f64, _>(&long[..]), Err(Error::Format(_))));
    }

    #[test]
    fn rejects_out_of_range_feature() {
        let mut bytes = Vec::new();
        write_model(&sample(), &mut bytes).unwrap();
        // First node of the first tree: feature index at offset 17 + 4.
        bytes[21..25].copy_from_slice(&9i32.to_le_bytes());
        assert!(matches!(read_model::<f64, _>(&bytes[..]), Err(Error::Format(_))));
    }
}
