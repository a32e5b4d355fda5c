use crate::losses::{total_loss_grad, ClassPairs, LossBreakdown};
use crate::model::{reparameterize, reparameterize_backward, VscModel};
use crate::nn::rng::RngStream;
use crate::nn::Tensor2D;

use super::TrainError;

/// Settings for one evaluation of the batch objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveSettings {
    pub temperature: f64,
    pub lambda: f64,
    pub mc_samples: usize,
}

/// Evaluates the combined objective on a batch and, with `backprop`,
/// accumulates its gradient into the model's parameter buffers.
///
/// Noise is drawn from `rng` in sample order: all slab noise, then all
/// spike noise, for each of the `mc_samples` draws.
pub fn batch_objective(
    model: &mut VscModel,
    x: &Tensor2D,
    pairs: &ClassPairs,
    rng: &mut RngStream,
    settings: ObjectiveSettings,
    backprop: bool,
) -> Result<LossBreakdown, TrainError> {
    let (post, enc_trace) = model.encode_traced(x)?;
    let mut samples = Vec::with_capacity(settings.mc_samples);
    let mut logits = Vec::with_capacity(settings.mc_samples);
    for _ in 0..settings.mc_samples {
        let sample = reparameterize(&post, rng, settings.temperature)?;
        let (l, trace) = model.decode_traced(&sample.z)?;
        samples.push((sample, trace));
        logits.push(l);
    }
    let alpha = model.config().alpha;
    let (breakdown, grads) = total_loss_grad(x, &logits, &post, pairs, alpha, settings.lambda)?;
    if backprop {
        let mut post_grads = grads.posterior;
        for ((sample, trace), dlogits) in samples.iter().zip(&grads.dlogits) {
            let dz = model.decoder_backward(trace, dlogits)?;
            let path = reparameterize_backward(&post, sample, &dz)?;
            post_grads.add_assign(&path)?;
        }
        model.encoder_backward(&enc_trace, &post_grads)?;
    }
    Ok(breakdown)
}
