//! The IDX container used to distribute MNIST and Fashion-MNIST.
//!
//! ```text
//! bytes 0-1   0x00 0x00
//! byte  2     0x08               (unsigned byte payload)
//! byte  3     number of dimensions
//! then        one big-endian u32 per dimension
//! then        product(dims) payload bytes, row-major
//! ```
//! Read as a single big-endian u32, the first four bytes are the magic
//! number: 2051 for image files (3 dims) and 2049 for label files (1 dim).

use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;
use sha2::{Digest, Sha256};

use super::DataError;
use crate::nn::Tensor2D;

pub const IMAGE_MAGIC: u32 = 2051;
pub const LABEL_MAGIC: u32 = 2049;
pub const IMAGE_SIDE: usize = 28;
pub const IMAGE_PIXELS: usize = IMAGE_SIDE * IMAGE_SIDE;
pub const NUM_CLASSES: u8 = 10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawIdxFile {
    pub magic: u32,
    pub dims: Vec<u32>,
    pub payload: Vec<u8>,
}

impl RawIdxFile {
    /// Parses the container without interpreting it.
    pub fn parse(bytes: &[u8]) -> Result<Self, DataError> {
        if bytes.len() < 4 {
            return Err(DataError::TruncatedPayload {
                expected: 4,
                found: bytes.len(),
            });
        }
        let magic = u32::from_be_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]);
        if magic != IMAGE_MAGIC && magic != LABEL_MAGIC {
            return Err(DataError::BadMagic {
                expected: IMAGE_MAGIC,
                found: magic,
            });
        }
        let ndims = (magic & 0xFF) as usize;
        let header_len = 4 + 4 * ndims;
        if bytes.len() < header_len {
            return Err(DataError::TruncatedPayload {
                expected: header_len,
                found: bytes.len(),
            });
        }
        let dims: Vec<u32> = bytes[4..header_len]
            .chunks_exact(4)
            .map(|c| u32::from_be_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        let expected = dims.iter().map(|&d| d as usize).product::<usize>();
        let payload = &bytes[header_len..];
        if payload.len() != expected {
            return Err(DataError::TruncatedPayload {
                expected,
                found: payload.len(),
            });
        }
        Ok(RawIdxFile {
            magic,
            dims,
            payload: payload.to_vec(),
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + 4 * self.dims.len() + self.payload.len());
        out.extend_from_slice(&self.magic.to_be_bytes());
        for d in &self.dims {
            out.extend_from_slice(&d.to_be_bytes());
        }
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn images(count: usize, rows: usize, cols: usize, payload: Vec<u8>) -> Self {
        RawIdxFile {
            magic: IMAGE_MAGIC,
            dims: vec![count as u32, rows as u32, cols as u32],
            payload,
        }
    }

    pub fn labels(labels: Vec<u8>) -> Self {
        RawIdxFile {
            magic: LABEL_MAGIC,
            dims: vec![labels.len() as u32],
            payload: labels,
        }
    }
}

fn expect_magic(bytes: &[u8], expected: u32) -> Result<(), DataError> {
    if bytes.len() >= 4 {
        let found = u32::from_be_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]);
        if found != expected {
            return Err(DataError::BadMagic { expected, found });
        }
    }
    Ok(())
}

/// Decodes an image file into an `N × rows·cols` matrix of raw 0..255
/// intensities. With `strict`, images must be 28×28.
pub fn parse_idx_images(bytes: &[u8], strict: bool) -> Result<Tensor2D, DataError> {
    expect_magic(bytes, IMAGE_MAGIC)?;
    let raw = RawIdxFile::parse(bytes)?;
    let (n, rows, cols) = (raw.dims[0] as usize, raw.dims[1] as usize, raw.dims[2] as usize);
    if strict && (rows != IMAGE_SIDE || cols != IMAGE_SIDE) {
        return Err(DataError::BadShape { rows, cols });
    }
    let data = raw.payload.iter().map(|&b| f64::from(b)).collect();
    Ok(Tensor2D::from_vec(n, rows * cols, data).expect("payload length checked against header"))
}

/// Decodes a label file. With `strict`, every label must be below 10.
pub fn parse_idx_labels(bytes: &[u8], strict: bool) -> Result<Vec<u8>, DataError> {
    expect_magic(bytes, LABEL_MAGIC)?;
    let raw = RawIdxFile::parse(bytes)?;
    if strict {
        if let Some((index, &label)) = raw.payload.iter().enumerate().find(|(_, &l)| l >= NUM_CLASSES) {
            return Err(DataError::LabelOutOfRange { index, label });
        }
    }
    Ok(raw.payload)
}

/// Reads a file, transparently inflating it when it carries a gzip header.
pub fn read_maybe_gz(path: &Path) -> Result<Vec<u8>, DataError> {
    let io = |source| DataError::Io {
        path: path.to_path_buf(),
        source,
    };
    let bytes = std::fs::read(path).map_err(io)?;
    if bytes.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(bytes.as_slice()).read_to_end(&mut out).map_err(io)?;
        Ok(out)
    } else {
        Ok(bytes)
    }
}

/// Lowercase hex SHA-256 of the file as stored on disk.
pub fn sha256_file(path: &Path) -> Result<String, DataError> {
    let bytes = std::fs::read(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn verify_checksum(path: &Path, expected: &str) -> Result<(), DataError> {
    let found = sha256_file(path)?;
    if !found.eq_ignore_ascii_case(expected.trim()) {
        return Err(DataError::ChecksumMismatch {
            path: path.to_path_buf(),
            expected: expected.to_string(),
            found,
        });
    }
    Ok(())
}
