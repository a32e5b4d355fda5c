use super::LossError;
use crate::nn::{sigmoid, NnError, Tensor2D};

fn check(logits: &Tensor2D, x: &Tensor2D) -> Result<(), LossError> {
    if logits.shape() != x.shape() {
        return Err(NnError::ShapeMismatch {
            op: "recon_nll",
            left: logits.shape(),
            right: x.shape(),
        }
        .into());
    }
    if let Some((index, &value)) = x.as_slice().iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
        return Err(LossError::TargetOutOfRange { index, value });
    }
    Ok(())
}

/// Binary cross-entropy of soft targets `x` under pixel logits, summed over
/// pixels and averaged over the batch.
///
/// Uses `max(l, 0) − l·x + log(1 + e^{−|l|})`, which never overflows.
pub fn recon_nll(logits: &Tensor2D, x: &Tensor2D) -> Result<f64, LossError> {
    check(logits, x)?;
    let total: f64 = logits
        .as_slice()
        .iter()
        .zip(x.as_slice())
        .map(|(&l, &t)| l.max(0.0) - l * t + (-l.abs()).exp().ln_1p())
        .sum();
    Ok(total / logits.rows().max(1) as f64)
}

/// `d recon_nll / d logits = (sigmoid(l) − x) / batch`.
pub fn recon_nll_grad(logits: &Tensor2D, x: &Tensor2D) -> Result<Tensor2D, LossError> {
    check(logits, x)?;
    let inv = 1.0 / logits.rows().max(1) as f64;
    Ok(logits.zip_map(x, |l, t| (sigmoid(l) - t) * inv)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits_cost_ln2_per_pixel() {
        let v = recon_nll(&Tensor2D::zeros(3, 784), &Tensor2D::filled(3, 784, 0.5)).unwrap();
        assert!((v - 784.0 * 2f64.ln()).abs() < 1e-9);
        assert!((v - 543.43).abs() < 0.01);
    }

    #[test]
    fn confident_correct_logits_cost_nothing() {
        let x = Tensor2D::from_rows(&[[1.0, 0.0, 1.0]]).unwrap();
        let logits = Tensor2D::from_rows(&[[60.0, -60.0, 60.0]]).unwrap();
        assert!(recon_nll(&logits, &x).unwrap() < 1e-20);
        let huge = Tensor2D::from_rows(&[[1e300, -1e300, 1e300]]).unwrap();
        assert_eq!(recon_nll(&huge, &x).unwrap(), 0.0);
    }

    #[test]
    fn matches_direct_cross_entropy() {
        let x = Tensor2D::from_rows(&[[0.1, 0.9, 0.5, 0.0], [1.0, 0.3, 0.7, 0.2]]).unwrap();
        let logits = Tensor2D::from_rows(&[[-1.3, 0.4, 2.2, -0.1], [0.9, -2.5, 0.05, 1.7]]).unwrap();
        let mut direct = 0.0;
        for (l, t) in logits.as_slice().iter().zip(x.as_slice()) {
            let p = 1.0 / (1.0 + (-l).exp());
            direct -= t * p.ln() + (1.0 - t) * (1.0 - p).ln();
        }
        direct /= 2.0;
        assert!((recon_nll(&logits, &x).unwrap() - direct).abs() < 1e-10);
    }

    #[test]
    fn targets_must_be_probabilities() {
        let x = Tensor2D::from_rows(&[[0.5, 1.2]]).unwrap();
        assert_eq!(
            recon_nll(&Tensor2D::zeros(1, 2), &x),
            Err(LossError::TargetOutOfRange { index: 1, value: 1.2 })
        );
        assert!(recon_nll(&Tensor2D::zeros(1, 3), &Tensor2D::zeros(1, 2)).is_err());
    }
}
