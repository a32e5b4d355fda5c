//! Class-aligned variational sparse coding.
//!
//! A spike-and-slab variational autoencoder whose per-dimension spike
//! probabilities (`γ`) are pulled together for samples of the same class by a
//! closed-form Bernoulli Jensen-Shannon penalty. The crate contains everything
//! needed to train such a model on MNIST-style IDX data and to inspect the
//! resulting latent space:
//!
//! - [`data`]: IDX parsing, normalization and class-aware batch planning.
//! - [`nn`]: dense tensors, affine layers with explicit backward passes, Adam,
//!   seedable RNG streams and a finite-difference gradient checker.
//! - [`model`]: encoder, spike-and-slab reparameterization and decoder.
//! - [`losses`]: reconstruction, spike-and-slab KL, Bernoulli JSD, the class
//!   alignment term, the `λ` schedule and the combined objective.
//! - [`trainer`]: the epoch loop, training logs and checkpoints.
//! - [`analysis`]: class `γ` heatmaps, similarity matrices, active dimension
//!   sets, alignment scores and latent traversals.
//!
//! ```
//! use vsc_core::losses::{bernoulli_jsd, GammaVector};
//!
//! let a = GammaVector::new(vec![0.9]).unwrap();
//! let b = GammaVector::new(vec![0.1]).unwrap();
//! let jsd = bernoulli_jsd(&a, &b).unwrap();
//! assert!((jsd - 0.368_064).abs() < 1e-5);
//! ```

pub mod analysis;
pub mod data;
pub mod losses;
pub mod model;
pub mod nn;
pub mod trainer;

pub use analysis::{ClassProbMatrix, SimilarityMatrix, TraversalGrid};
pub use data::{BatchPlan, LabeledDataset};
pub use losses::{GammaVector, LambdaSchedule, LossBreakdown};
pub use model::{LatentSample, ModelConfig, SpikeSlabPosterior, VscModel};
pub use nn::Tensor2D;
pub use trainer::{Checkpoint, TrainConfig, Trainer, TrainingLog};
