use crate::model::VscModel;
use crate::nn::{sigmoid, Tensor2D};

use super::AnalysisError;

/// Decoded frames of one latent coordinate swept over a range.
#[derive(Debug, Clone, PartialEq)]
pub struct TraversalGrid {
    pub source: Vec<f64>,
    pub dim: usize,
    pub values: Vec<f64>,
    /// One image per sweep value, pixels in `[0, 1]`, row-major.
    pub frames: Vec<Vec<f64>>,
}

impl TraversalGrid {
    /// Mean absolute pixel change between consecutive frames.
    pub fn mean_frame_delta(&self) -> f64 {
        let mut total = 0.0;
        let mut count = 0usize;
        for w in self.frames.windows(2) {
            total += w[0].iter().zip(&w[1]).map(|(a, b)| (a - b).abs()).sum::<f64>();
            count += w[0].len();
        }
        if count == 0 {
            0.0
        } else {
            total / count as f64
        }
    }
}

/// `steps` equally spaced values from `lo` to `hi` inclusive.
pub(crate) fn linspace(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    let last = (steps - 1) as f64;
    (0..steps)
        .map(|i| if i + 1 == steps { hi } else { lo + (hi - lo) * i as f64 / last })
        .collect()
}

/// Encodes `x`, sets the base latent to the posterior mean with hard spikes
/// (`μ` where `γ ≥ ½`, zero elsewhere), and decodes it with coordinate `dim`
/// replaced by each value of `linspace(lo, hi, steps)`.
pub fn latent_traversal(
    model: &VscModel,
    x: &[f64],
    dim: usize,
    lo: f64,
    hi: f64,
    steps: usize,
) -> Result<TraversalGrid, AnalysisError> {
    let config = model.config();
    if dim >= config.latent_dim {
        return Err(AnalysisError::DimOutOfRange {
            dim,
            latent_dim: config.latent_dim,
        });
    }
    if steps < 2 {
        return Err(AnalysisError::TooFewSteps(steps));
    }
    if x.len() != config.input_dim {
        return Err(AnalysisError::InputSize {
            expected: config.input_dim,
            found: x.len(),
        });
    }
    let input = Tensor2D::from_vec(1, x.len(), x.to_vec()).map_err(crate::model::ModelError::from)?;
    let post = model.encode(&input)?;
    let base = VscModel::hard_spike_mean(&post);

    let values = linspace(lo, hi, steps);
    let mut z = Tensor2D::zeros(steps, config.latent_dim);
    for (r, &v) in values.iter().enumerate() {
        z.row_mut(r).copy_from_slice(base.row(0));
        z.set(r, dim, v);
    }
    let logits = model.decode(&z)?;
    let frames = logits.iter_rows().map(|row| row.iter().map(|&l| sigmoid(l)).collect()).collect();
    Ok(TraversalGrid {
        source: x.to_vec(),
        dim,
        values,
        frames,
    })
}
