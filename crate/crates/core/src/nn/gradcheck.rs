//! Central-difference gradient checking.

/// Smallest denominator used when forming relative errors.
pub const DENOMINATOR_FLOOR: f64 = 1e-8;

/// Relative error between two scalars, `|a − n| / max(|a|, |n|, 1e-8)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(DENOMINATOR_FLOOR)
}

/// Central differences of `loss` at every coordinate of `params`.
pub fn numeric_gradient(mut loss: impl FnMut(&[f64]) -> f64, params: &[f64], epsilon: f64) -> Vec<f64> {
    let mut p = params.to_vec();
    (0..p.len())
        .map(|i| {
            let orig = p[i];
            p[i] = orig + epsilon;
            let plus = loss(&p);
            p[i] = orig - epsilon;
            let minus = loss(&p);
            p[i] = orig;
            (plus - minus) / (2.0 * epsilon)
        })
        .collect()
}

/// Worst relative error between `analytic` and the central-difference
/// gradient of `loss` at `params`.
///
/// `loss` must be a deterministic function of its argument; stochastic
/// losses need their noise frozen by the caller.
pub fn finite_diff_check(
    loss: impl FnMut(&[f64]) -> f64,
    params: &[f64],
    analytic: &[f64],
    epsilon: f64,
) -> f64 {
    assert_eq!(params.len(), analytic.len(), "gradient length mismatch");
    numeric_gradient(loss, params, epsilon)
        .iter()
        .zip(analytic)
        .map(|(&n, &a)| relative_error(a, n))
        .fold(0.0, f64::max)
}
