//! Datasets and the loaders that build them.

mod idx;
mod parity;
mod splice;
mod split;
mod tabular;
pub mod wavelet;

pub use idx::{load_mnist_idx, read_idx_images, read_idx_labels, rows_as_groups, IMAGE_MAGIC, LABEL_MAGIC};
pub use parity::{gen_parity, PARITY_NOISE_GROUP};
pub use splice::{load_splice, load_splice_fasta_pair, one_hot_sequence, LabelSource, SpliceFormat};
pub use split::{balanced_downsample, bootstrap, holdout};
pub use tabular::{load_csv_with_manifest, CsvOptions};
pub use wavelet::{haar_dataset, haar_forward, inverse_haar, WaveletLayout};

use crate::error::{Error, Result};
use crate::grouping::GroupPartition;
use crate::matrix::Matrix;

/// Features `x` (`n × p`), integer labels in `0..num_classes` and the group
/// partition of the columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    x: Matrix,
    y: Vec<usize>,
    num_classes: usize,
    partition: GroupPartition,
    feature_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(x: Matrix, y: Vec<usize>, num_classes: usize, partition: GroupPartition) -> Result<Self> {
        if x.rows() != y.len() {
            return Err(Error::dims(format!("{} rows but {} labels", x.rows(), y.len())));
        }
        if partition.p() != x.cols() {
            return Err(Error::dims(format!(
                "partition covers {} columns, data has {}",
                partition.p(),
                x.cols()
            )));
        }
        if num_classes == 0 {
            return Err(Error::invalid("num_classes must be positive"));
        }
        if let Some(&label) = y.iter().find(|&&l| l >= num_classes) {
            return Err(Error::LabelOutOfRange { label, num_classes });
        }
        if !x.is_finite() {
            return Err(Error::invalid("features contain non-finite values"));
        }
        Ok(Dataset {
            x,
            y,
            num_classes,
            partition,
            feature_names: None,
        })
    }

    pub fn with_partition(mut self, partition: GroupPartition) -> Result<Self> {
        if partition.p() != self.p() {
            return Err(Error::dims(format!(
                "partition covers {} columns, data has {}",
                partition.p(),
                self.p()
            )));
        }
        self.partition = partition;
        Ok(self)
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.p() {
            return Err(Error::dims(format!("{} names for {} features", names.len(), self.p())));
        }
        self.feature_names = Some(names);
        Ok(self)
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn y(&self) -> &[usize] {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn p(&self) -> usize {
        self.x.cols()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn partition(&self) -> &GroupPartition {
        &self.partition
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        self.y.iter().for_each(|&y| counts[y] += 1);
        counts
    }

    /// Rows at `indices` (repeats allowed), same partition.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_rows(indices),
            y: indices.iter().map(|&i| self.y[i]).collect(),
            num_classes: self.num_classes,
            partition: self.partition.clone(),
            feature_names: self.feature_names.clone(),
        }
    }

    /// First `n` rows.
    pub fn head(&self, n: usize) -> Dataset {
        let idx: Vec<usize> = (0..n.min(self.n())).collect();
        self.subset(&idx)
    }
}
