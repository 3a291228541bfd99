use std::path::Path;

use super::Dataset;
use crate::error::{Error, Result};
use crate::grouping::GroupPartition;
use crate::matrix::Matrix;

/// Big-endian magic of an unsigned-byte, 3-dimensional IDX file.
pub const IMAGE_MAGIC: u32 = 0x0000_0803;
/// Big-endian magic of an unsigned-byte, 1-dimensional IDX file.
pub const LABEL_MAGIC: u32 = 0x0000_0801;

struct Idx<'a> {
    dims: Vec<usize>,
    payload: &'a [u8],
}

fn parse_idx<'a>(bytes: &'a [u8], path: &Path, magic: u32) -> Result<Idx<'a>> {
    let truncated = |expected: usize| Error::TruncatedPayload {
        path: path.to_path_buf(),
        expected,
        found: bytes.len(),
    };
    let word = |at: usize| -> Option<u32> {
        bytes
            .get(at..at + 4)
            .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    };
    let found = word(0).ok_or_else(|| truncated(4))?;
    if found != magic {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
            expected: magic,
            found,
        });
    }
    let ndims = (magic & 0xff) as usize;
    let header = 4 + 4 * ndims;
    let dims = (0..ndims)
        .map(|d| word(4 + 4 * d).map(|v| v as usize))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| truncated(header))?;
    let len: usize = dims.iter().product();
    let payload = bytes.get(header..header + len).ok_or_else(|| truncated(header + len))?;
    Ok(Idx { dims, payload })
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io_at(path, e))
}

/// Returns `(count, rows, cols, pixels)`.
pub fn read_idx_images(path: &Path) -> Result<(usize, usize, usize, Vec<u8>)> {
    let bytes = read(path)?;
    let idx = parse_idx(&bytes, path, IMAGE_MAGIC)?;
    Ok((idx.dims[0], idx.dims[1], idx.dims[2], idx.payload.to_vec()))
}

pub fn read_idx_labels(path: &Path) -> Result<Vec<u8>> {
    let bytes = read(path)?;
    Ok(parse_idx(&bytes, path, LABEL_MAGIC)?.payload.to_vec())
}

/// Loads an IDX image/label pair as one sample per row with pixels scaled to
/// `[0, 1]`. The partition is a single group; attach a real one with
/// [`Dataset::with_partition`] (e.g. [`rows_as_groups`]).
pub fn load_mnist_idx(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let (n, rows, cols, pixels) = read_idx_images(images_path)?;
    let labels = read_idx_labels(labels_path)?;
    if labels.len() != n {
        return Err(Error::CountMismatch {
            images: n,
            labels: labels.len(),
        });
    }
    let p = rows * cols;
    let x = Matrix::from_vec(n, p, pixels.iter().map(|&v| f64::from(v) / 255.0).collect())?;
    let y: Vec<usize> = labels.iter().map(|&l| usize::from(l)).collect();
    let num_classes = y.iter().max().map_or(10, |&m| (m + 1).max(10));
    Dataset::new(x, y, num_classes, GroupPartition::whole(p)?)
}

/// One group per image row: group `r` holds columns `r·width .. (r+1)·width`.
pub fn rows_as_groups(height: usize, width: usize) -> GroupPartition {
    GroupPartition::contiguous(&vec![width; height]).expect("contiguous rows form a partition")
}
