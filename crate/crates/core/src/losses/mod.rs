//! Objective terms and their analytic gradients.
//!
//! All quantities are in nats. Per-sample terms (reconstruction and KL) are
//! averaged over the batch; the alignment term is already an average over
//! within-class pairs. The training objective is
//!
//! ```text
//! total = recon + kl + λ · jsd
//! ```
//!
//! and `λ = 0` leaves the plain spike-and-slab negative ELBO.

mod jsd;
mod kl;
mod recon;
mod schedule;

pub use jsd::{
    bernoulli_jsd, bernoulli_jsd_grad, class_jsd, jsd_term, ClassPairs, GammaVector,
};
pub use kl::{spike_slab_kl, spike_slab_kl_grad};
pub use recon::{recon_nll, recon_nll_grad};
pub use schedule::{lambda_schedule, LambdaSchedule};

use thiserror::Error;

use crate::model::{PosteriorGrads, SpikeSlabPosterior};
use crate::nn::{NnError, Tensor2D};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LossError {
    #[error("target {value} at flat index {index} is outside [0, 1]")]
    TargetOutOfRange { index: usize, value: f64 },
    #[error("gamma vectors differ in length: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("gamma value {0} is outside (0, 1)")]
    GammaOutOfRange(f64),
    #[error("no Monte-Carlo samples supplied")]
    NoSamples,
    #[error(transparent)]
    Nn(#[from] NnError),
}

/// The terms of the combined objective for one batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    /// Mean Bernoulli negative log-likelihood, nats per sample.
    pub recon: f64,
    /// Mean spike-and-slab KL, nats per sample.
    pub kl: f64,
    /// Class-averaged pairwise JSD, nats.
    pub jsd: f64,
    pub lambda: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn new(recon: f64, kl: f64, jsd: f64, lambda: f64) -> Self {
        LossBreakdown {
            recon,
            kl,
            jsd,
            lambda,
            total: recon + kl + lambda * jsd,
        }
    }

    /// `recon + kl`, the negative ELBO.
    pub fn neg_elbo(&self) -> f64 {
        self.recon + self.kl
    }

    pub fn is_finite(&self) -> bool {
        [self.recon, self.kl, self.jsd, self.lambda, self.total]
            .iter()
            .all(|v| v.is_finite())
    }
}

/// Gradients of [`total_loss`] with respect to its differentiable inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveGrads {
    /// One entry per Monte-Carlo sample, each already scaled by `1/L`.
    pub dlogits: Vec<Tensor2D>,
    /// Direct gradients on `μ`, `log σ²` and `γ` (KL plus `λ`·JSD). The
    /// reparameterization path is added by the model.
    pub posterior: PosteriorGrads,
}

fn mean_recon(logits: &[Tensor2D], x: &Tensor2D) -> Result<f64, LossError> {
    if logits.is_empty() {
        return Err(LossError::NoSamples);
    }
    let mut sum = 0.0;
    for l in logits {
        sum += recon_nll(l, x)?;
    }
    Ok(sum / logits.len() as f64)
}

/// Combined objective for a batch with `L = logits.len()` decoded samples.
pub fn total_loss(
    x: &Tensor2D,
    logits: &[Tensor2D],
    posterior: &SpikeSlabPosterior,
    pairs: &ClassPairs,
    alpha: f64,
    lambda: f64,
) -> Result<LossBreakdown, LossError> {
    let recon = mean_recon(logits, x)?;
    let kl = spike_slab_kl(posterior, alpha);
    let jsd = pairs.jsd(&posterior.gamma)?;
    Ok(LossBreakdown::new(recon, kl, jsd, lambda))
}

/// [`total_loss`] together with its gradients.
///
/// The JSD gradient is only formed when `λ ≠ 0`, so a zero weight leaves the
/// gradients of the plain objective untouched bit for bit.
pub fn total_loss_grad(
    x: &Tensor2D,
    logits: &[Tensor2D],
    posterior: &SpikeSlabPosterior,
    pairs: &ClassPairs,
    alpha: f64,
    lambda: f64,
) -> Result<(LossBreakdown, ObjectiveGrads), LossError> {
    let breakdown = total_loss(x, logits, posterior, pairs, alpha, lambda)?;
    let scale = 1.0 / logits.len() as f64;
    let mut dlogits = Vec::with_capacity(logits.len());
    for l in logits {
        let mut g = recon_nll_grad(l, x)?;
        g.scale(scale);
        dlogits.push(g);
    }
    let mut grads = spike_slab_kl_grad(posterior, alpha);
    if lambda != 0.0 {
        let g = pairs.jsd_grad(&posterior.gamma)?;
        grads.gamma.add_scaled(&g, lambda)?;
    }
    Ok((
        breakdown,
        ObjectiveGrads {
            dlogits,
            posterior: grads,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::rng::{Purpose, RngStream};

    fn random_case(seed: u64) -> (Tensor2D, Vec<Tensor2D>, SpikeSlabPosterior, Vec<u8>) {
        let mut rng = RngStream::for_purpose(seed, Purpose::Eval, 1, 2);
        let mut t = |r: usize, c: usize, f: &mut dyn FnMut(&mut RngStream) -> f64| {
            Tensor2D::from_vec(r, c, (0..r * c).map(|_| f(&mut rng)).collect()).unwrap()
        };
        let x = t(6, 10, &mut |r| r.uniform());
        let logits = vec![t(6, 10, &mut |r| 2.0 * r.normal()), t(6, 10, &mut |r| r.normal())];
        let post = SpikeSlabPosterior {
            mu: t(6, 8, &mut |r| r.normal()),
            log_var: t(6, 8, &mut |r| r.normal()),
            gamma: t(6, 8, &mut |r| 0.05 + 0.9 * r.uniform()),
        };
        (x, logits, post, vec![0, 1, 0, 1, 0, 2])
    }

    #[test]
    fn total_recomposes_components() {
        let (x, logits, post, labels) = random_case(5);
        let pairs = ClassPairs::all(&labels);
        let b = total_loss(&x, &logits, &post, &pairs, 0.3, 2.5).unwrap();
        let recon = (recon_nll(&logits[0], &x).unwrap() + recon_nll(&logits[1], &x).unwrap()) / 2.0;
        let kl = spike_slab_kl(&post, 0.3);
        let gammas = crate::model::gamma_of(&post);
        let jsd = class_jsd(&gammas, &labels).unwrap();
        assert!((b.recon - recon).abs() < 1e-12);
        assert!((b.kl - kl).abs() < 1e-12);
        assert!((b.jsd - jsd).abs() < 1e-12);
        assert!((b.total - (recon + kl + 2.5 * jsd)).abs() < 1e-12);
    }

    #[test]
    fn zero_lambda_is_plain_negative_elbo() {
        let (x, logits, post, labels) = random_case(6);
        let pairs = ClassPairs::all(&labels);
        let b = total_loss(&x, &logits, &post, &pairs, 0.2, 0.0).unwrap();
        assert_eq!(b.total, b.recon + b.kl);
        assert_eq!(b.total, b.neg_elbo());
        let (_, g0) = total_loss_grad(&x, &logits, &post, &pairs, 0.2, 0.0).unwrap();
        assert_eq!(g0.posterior, spike_slab_kl_grad(&post, 0.2));
    }

    #[test]
    fn doubling_lambda_doubles_alignment_share() {
        let (x, logits, post, labels) = random_case(7);
        let pairs = ClassPairs::all(&labels);
        let a = total_loss(&x, &logits, &post, &pairs, 0.2, 1.5).unwrap();
        let b = total_loss(&x, &logits, &post, &pairs, 0.2, 3.0).unwrap();
        let share = |l: &LossBreakdown| l.lambda * l.jsd;
        assert_eq!(share(&b), 2.0 * share(&a));
    }

    #[test]
    fn identical_gammas_in_one_class_ignore_lambda() {
        let (x, logits, mut post, _) = random_case(8);
        let row: Vec<f64> = post.gamma.row(0).to_vec();
        for r in 0..post.gamma.rows() {
            post.gamma.row_mut(r).copy_from_slice(&row);
        }
        let pairs = ClassPairs::all(&[3; 6]);
        let a = total_loss(&x, &logits, &post, &pairs, 0.2, 0.0).unwrap();
        let b = total_loss(&x, &logits, &post, &pairs, 0.2, 50.0).unwrap();
        assert_eq!(b.jsd, 0.0);
        assert_eq!(a.total, b.total);
    }

    #[test]
    fn empty_samples_rejected() {
        let (x, _, post, labels) = random_case(9);
        let pairs = ClassPairs::all(&labels);
        assert_eq!(total_loss(&x, &[], &post, &pairs, 0.2, 1.0), Err(LossError::NoSamples));
    }
}
