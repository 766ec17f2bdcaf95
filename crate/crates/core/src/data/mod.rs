//! Dataset loading and shaping: IDX and CSV readers, synthetic blobs, dimension
//! reduction, non-IID partitioning and stratified splitting.

mod idx;
mod partition;
mod reduce;
mod synth;
mod tabular;

pub use idx::{
    load_idx, read_idx_images, read_idx_labels, write_idx_images, write_idx_labels, write_idx_pair,
};
pub use partition::{holdout_split, partition_noniid, split_train_test, PartitionPlan};
pub use reduce::{avgpool, reduce_dims, Pca, ReduceMethod};
pub use synth::synth_blobs;
pub use tabular::load_csv;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub num_classes: usize,
    /// Height and width when rows are flattened images.
    pub image_shape: Option<(usize, usize)>,
    pub provenance: String,
}

impl Dataset {
    pub fn new(
        features: Vec<Vec<f64>>,
        labels: Vec<usize>,
        num_classes: usize,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        let ds = Dataset {
            features,
            labels,
            num_classes,
            image_shape: None,
            provenance: provenance.into(),
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.len() != self.labels.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} feature rows but {} labels",
                self.features.len(),
                self.labels.len()
            )));
        }
        let d = self.dim();
        for (i, row) in self.features.iter().enumerate() {
            if row.len() != d {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} features, expected {d}",
                    row.len()
                )));
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(Error::Format(format!("row {i} has a non-finite feature")));
            }
        }
        if let Some(&bad) = self.labels.iter().find(|&&l| l >= self.num_classes) {
            return Err(Error::InvalidLabel {
                label: bad,
                num_classes: self.num_classes,
            });
        }
        if let Some((h, w)) = self.image_shape {
            if h * w != d {
                return Err(Error::DimensionMismatch(format!(
                    "image shape {h}x{w} does not match {d} features"
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            num_classes: self.num_classes,
            image_shape: self.image_shape,
            provenance: self.provenance.clone(),
        }
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    pub fn with_features(&self, features: Vec<Vec<f64>>) -> Result<Dataset> {
        let ds = Dataset {
            features,
            labels: self.labels.clone(),
            num_classes: self.num_classes,
            image_shape: None,
            provenance: self.provenance.clone(),
        };
        ds.validate()?;
        Ok(ds)
    }
}
