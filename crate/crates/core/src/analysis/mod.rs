//! Diagnostics over a trained model.
//!
//! * [`class_gamma_matrix`] — per-class mean spike probabilities, the matrix
//!   behind the class heatmaps;
//! * [`similarity_matrices`] — Pearson, cosine-distance and Euclidean
//!   comparisons between those class rows;
//! * [`active_dimension_sets`] — which dimensions each class switches on, and
//!   which are shared by all classes or owned by one;
//! * [`alignment_score`] — mean within-class pairwise Bernoulli JSD;
//! * [`latent_traversal`] — decoded sweeps of a single latent coordinate;
//! * [`emit`] — CSV and plain-PGM writers for all of the above.
//!
//! Everything here is read-only over the model and deterministic.

mod active;
mod alignment;
pub mod emit;
mod heatmap;
mod similarity;
mod traversal;

pub use active::{active_dimension_sets, ActiveSets, DEFAULT_THRESHOLD};
pub use alignment::alignment_score;
pub use heatmap::{class_gamma_matrix, encode_gammas, mean_active_fraction, ClassProbMatrix};
pub use similarity::{category_contrast, similarity_matrices, similarity_matrix, Metric, SimilarityMatrix};
pub use traversal::{latent_traversal, TraversalGrid};

use std::path::PathBuf;

use thiserror::Error;

use crate::model::ModelError;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("need at least {needed} classes, got {found}")]
    TooFewClasses { needed: usize, found: usize },
    #[error("latent dimension {dim} out of range for d = {latent_dim}")]
    DimOutOfRange { dim: usize, latent_dim: usize },
    #[error("traversal needs at least 2 steps, got {0}")]
    TooFewSteps(usize),
    #[error("threshold must lie in (0, 1), got {0}")]
    BadThreshold(f64),
    #[error("pairs_per_class must be at least 1")]
    NoPairs,
    #[error("input has {found} values, model expects {expected}")]
    InputSize { expected: usize, found: usize },
    #[error("cannot parse {what}: {detail}")]
    Parse { what: &'static str, detail: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("i/o on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
