use super::{NnError, Tensor2D};

/// Gradients of an affine map with respect to its input, weight and bias.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineGrads {
    pub dx: Tensor2D,
    pub dw: Tensor2D,
    pub db: Tensor2D,
}

/// `y = x·W + b` for `x: batch × in`, `W: in × out`, `b: 1 × out`.
pub fn affine_forward(x: &Tensor2D, w: &Tensor2D, b: &Tensor2D) -> Result<Tensor2D, NnError> {
    if b.rows() != 1 || b.cols() != w.cols() {
        return Err(NnError::ShapeMismatch {
            op: "affine_forward(bias)",
            left: w.shape(),
            right: b.shape(),
        });
    }
    let mut y = x.matmul(w)?;
    let bias = b.as_slice();
    let cols = y.cols();
    for r in 0..y.rows() {
        for (v, bv) in y.row_mut(r).iter_mut().zip(bias) {
            *v += bv;
        }
    }
    debug_assert_eq!(cols, bias.len());
    Ok(y)
}

/// Backward pass of [`affine_forward`] given `dL/dy`.
pub fn affine_backward(x: &Tensor2D, w: &Tensor2D, upstream: &Tensor2D) -> Result<AffineGrads, NnError> {
    if upstream.rows() != x.rows() || upstream.cols() != w.cols() {
        return Err(NnError::ShapeMismatch {
            op: "affine_backward",
            left: (x.rows(), w.cols()),
            right: upstream.shape(),
        });
    }
    Ok(AffineGrads {
        dx: upstream.matmul_t(w)?,
        dw: x.t_matmul(upstream)?,
        db: upstream.sum_rows(),
    })
}
