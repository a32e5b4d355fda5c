//! Minimal deterministic computation substrate.
//!
//! Everything here is plain `f64` arithmetic on row-major matrices. Layers
//! expose explicit forward and backward functions instead of an autodiff
//! graph; [`gradcheck`] verifies them against central differences.

mod activation;
mod adam;
mod affine;
pub mod gradcheck;
mod params;
pub mod rng;
mod tensor;

pub use activation::{sigmoid, softplus, Activation};
pub use adam::{AdamConfig, AdamState};
pub use affine::{affine_backward, affine_forward, AffineGrads};
pub use gradcheck::finite_diff_check;
pub use params::{Param, ParamStore};
pub use rng::{Purpose, RngStream, StreamKey};
pub use tensor::Tensor2D;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("non-finite gradient in parameter `{name}`")]
    NonFiniteGradient { name: String },
    #[error("duplicate parameter name `{0}`")]
    DuplicateParam(String),
    #[error("unknown parameter `{0}`")]
    UnknownParam(String),
}
