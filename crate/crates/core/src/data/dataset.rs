use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::idx::{parse_idx_images, parse_idx_labels, read_maybe_gz, NUM_CLASSES};
use super::DataError;
use crate::nn::Tensor2D;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DatasetTag {
    #[serde(rename = "mnist")]
    Mnist,
    #[serde(rename = "fashion-mnist")]
    FashionMnist,
}

impl DatasetTag {
    pub fn as_str(self) -> &'static str {
        match self {
            DatasetTag::Mnist => "mnist",
            DatasetTag::FashionMnist => "fashion-mnist",
        }
    }

    pub fn class_name(self, class: u8) -> &'static str {
        const DIGITS: [&str; 10] = ["0", "1", "2", "3", "4", "5", "6", "7", "8", "9"];
        const CLOTHES: [&str; 10] = [
            "t-shirt", "trouser", "pullover", "dress", "coat", "sandal", "shirt", "sneaker", "bag", "ankle-boot",
        ];
        let table = match self {
            DatasetTag::Mnist => &DIGITS,
            DatasetTag::FashionMnist => &CLOTHES,
        };
        table.get(class as usize).copied().unwrap_or("?")
    }
}

impl fmt::Display for DatasetTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DatasetTag {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mnist" => Ok(DatasetTag::Mnist),
            "fashion-mnist" => Ok(DatasetTag::FashionMnist),
            other => Err(DataError::UnknownTag(other.to_string())),
        }
    }
}

/// Maps raw 0..255 intensities to `[0, 1]` by dividing by 255.
pub fn normalize(raw: &Tensor2D) -> Tensor2D {
    raw.map(|v| v / 255.0)
}

/// Normalized images with their class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    images: Tensor2D,
    labels: Vec<u8>,
    tag: DatasetTag,
}

impl LabeledDataset {
    pub fn new(images: Tensor2D, labels: Vec<u8>, tag: DatasetTag) -> Result<Self, DataError> {
        if images.rows() != labels.len() {
            return Err(DataError::CountMismatch {
                images: images.rows(),
                labels: labels.len(),
            });
        }
        if let Some((index, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= NUM_CLASSES) {
            return Err(DataError::LabelOutOfRange { index, label });
        }
        debug_assert!(images.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
        Ok(LabeledDataset { images, labels, tag })
    }

    /// Parses an image/label IDX pair (28×28 images, labels below 10).
    pub fn from_idx(image_bytes: &[u8], label_bytes: &[u8], tag: DatasetTag) -> Result<Self, DataError> {
        let raw = parse_idx_images(image_bytes, true)?;
        let labels = parse_idx_labels(label_bytes, true)?;
        Self::new(normalize(&raw), labels, tag)
    }

    /// Loads an IDX pair from disk; gzip-compressed files are inflated.
    pub fn load(images: &Path, labels: &Path, tag: DatasetTag) -> Result<Self, DataError> {
        Self::from_idx(&read_maybe_gz(images)?, &read_maybe_gz(labels)?, tag)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn images(&self) -> &Tensor2D {
        &self.images
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn tag(&self) -> DatasetTag {
        self.tag
    }

    pub fn image(&self, i: usize) -> &[f64] {
        self.images.row(i)
    }

    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            images: self.images.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            tag: self.tag,
        }
    }

    /// The first `n` samples (or all of them, if fewer).
    pub fn take(&self, n: usize) -> LabeledDataset {
        let idx: Vec<usize> = (0..n.min(self.len())).collect();
        self.subset(&idx)
    }

    /// Sample indices grouped by class, each list in dataset order.
    pub fn class_indices(&self) -> BTreeMap<u8, Vec<usize>> {
        let mut map: BTreeMap<u8, Vec<usize>> = BTreeMap::new();
        for (i, &l) in self.labels.iter().enumerate() {
            map.entry(l).or_default().push(i);
        }
        map
    }
}
