//! Dataset ingestion: IDX containers, normalized labeled datasets and batch
//! plans.

mod batch;
mod dataset;
pub mod idx;

pub use batch::{make_batches, BatchPlan};
pub use dataset::{normalize, DatasetTag, LabeledDataset};
pub use idx::{parse_idx_images, parse_idx_labels, RawIdxFile};

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("bad IDX magic: expected {expected}, found {found}")]
    BadMagic { expected: u32, found: u32 },
    #[error("IDX payload truncated: header implies {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },
    #[error("unexpected image shape {rows}x{cols}, expected 28x28")]
    BadShape { rows: usize, cols: usize },
    #[error("label {label} at index {index} is out of range 0..10")]
    LabelOutOfRange { index: usize, label: u8 },
    #[error("image count {images} does not match label count {labels}")]
    CountMismatch { images: usize, labels: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("batch size {0} is below the minimum of 4")]
    BatchTooSmall(usize),
    #[error("checksum mismatch for {path}: expected {expected}, found {found}")]
    ChecksumMismatch {
        path: PathBuf,
        expected: String,
        found: String,
    },
    #[error("unknown dataset tag `{0}`")]
    UnknownTag(String),
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
