use crate::model::{PosteriorGrads, SpikeSlabPosterior};
use crate::nn::Tensor2D;

/// KL divergence from the spike-and-slab posterior to the prior
/// `α·N(0, 1) + (1 − α)·δ₀`, per sample, averaged over the batch:
///
/// ```text
/// KL = −Σᵢ [ γᵢ·½(1 + log σᵢ² − μᵢ² − σᵢ²)
///            + (1 − γᵢ)·log((1 − α)/(1 − γᵢ)) + γᵢ·log(α/γᵢ) ]
/// ```
pub fn spike_slab_kl(post: &SpikeSlabPosterior, alpha: f64) -> f64 {
    let log_a = alpha.ln();
    let log_1a = (1.0 - alpha).ln();
    let mut total = 0.0;
    for ((&m, &lv), &g) in post
        .mu
        .as_slice()
        .iter()
        .zip(post.log_var.as_slice())
        .zip(post.gamma.as_slice())
    {
        let slab = 0.5 * (1.0 + lv - m * m - lv.exp());
        let spike = (1.0 - g) * (log_1a - (1.0 - g).ln()) + g * (log_a - g.ln());
        total -= g * slab + spike;
    }
    total.max(0.0) / post.batch().max(1) as f64
}

/// Gradients of [`spike_slab_kl`] with respect to `μ`, `log σ²` and `γ`.
pub fn spike_slab_kl_grad(post: &SpikeSlabPosterior, alpha: f64) -> PosteriorGrads {
    let inv = 1.0 / post.batch().max(1) as f64;
    let log_odds_prior = alpha.ln() - (1.0 - alpha).ln();
    let (rows, cols) = post.mu.shape();
    let mut mu = Tensor2D::zeros(rows, cols);
    let mut log_var = Tensor2D::zeros(rows, cols);
    let mut gamma = Tensor2D::zeros(rows, cols);
    let src = post
        .mu
        .as_slice()
        .iter()
        .zip(post.log_var.as_slice())
        .zip(post.gamma.as_slice());
    let dst = mu
        .as_mut_slice()
        .iter_mut()
        .zip(log_var.as_mut_slice().iter_mut())
        .zip(gamma.as_mut_slice().iter_mut());
    for (((&m, &lv), &g), ((dm, dlv), dg)) in src.zip(dst) {
        let var = lv.exp();
        *dm = g * m * inv;
        *dlv = 0.5 * g * (var - 1.0) * inv;
        let slab = 0.5 * (1.0 + lv - m * m - var);
        let log_odds = g.ln() - (1.0 - g).ln();
        *dg = -(slab + log_odds_prior - log_odds) * inv;
    }
    PosteriorGrads { mu, log_var, gamma }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn post_1d(mu: f64, var: f64, gamma: f64) -> SpikeSlabPosterior {
        SpikeSlabPosterior {
            mu: Tensor2D::filled(1, 1, mu),
            log_var: Tensor2D::filled(1, 1, var.ln()),
            gamma: Tensor2D::filled(1, 1, gamma),
        }
    }

    #[test]
    fn posterior_equal_to_prior_costs_nothing() {
        let post = SpikeSlabPosterior {
            mu: Tensor2D::zeros(3, 5),
            log_var: Tensor2D::zeros(3, 5),
            gamma: Tensor2D::filled(3, 5, 0.05),
        };
        assert!(spike_slab_kl(&post, 0.05).abs() < 1e-9);
    }

    #[test]
    fn always_active_dimension_against_even_prior() {
        let kl = spike_slab_kl(&post_1d(0.0, 1.0, 1.0 - 1e-6), 0.5);
        assert!((kl - 2f64.ln()).abs() < 1e-4);
    }

    #[test]
    fn shifted_half_active_dimension() {
        // −[0.5·½(1 + 0 − 1 − 1) + 0 + 0] = 0.25
        let kl = spike_slab_kl(&post_1d(1.0, 1.0, 0.5), 0.5);
        assert!((kl - 0.25).abs() < 1e-12);
    }

    #[test]
    fn dense_limit_is_gaussian_kl() {
        let eps = 1e-9;
        let post = SpikeSlabPosterior {
            mu: Tensor2D::from_rows(&[[0.3, -1.1, 2.0]]).unwrap(),
            log_var: Tensor2D::from_rows(&[[-0.5, 0.2, 0.0]]).unwrap(),
            gamma: Tensor2D::filled(1, 3, 1.0 - eps),
        };
        let gauss: f64 = post
            .mu
            .as_slice()
            .iter()
            .zip(post.log_var.as_slice())
            .map(|(&m, &lv)| -0.5 * (1.0 + lv - m * m - lv.exp()))
            .sum();
        assert!((spike_slab_kl(&post, 1.0 - eps) - gauss).abs() < 1e-6);
    }
}
