use std::collections::BTreeMap;

use super::LossError;
use crate::nn::rng::RngStream;
use crate::nn::{NnError, Tensor2D};

/// Per-sample spike probabilities, one Bernoulli parameter per latent
/// dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaVector(Vec<f64>);

impl GammaVector {
    /// Accepts values strictly inside `(0, 1)`.
    pub fn new(values: Vec<f64>) -> Result<Self, LossError> {
        if let Some(&bad) = values.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
            return Err(LossError::GammaOutOfRange(bad));
        }
        Ok(GammaVector(values))
    }

    /// Clamps every value into `[eps, 1 − eps]`.
    pub fn clamped(values: Vec<f64>, eps: f64) -> Self {
        GammaVector(values.into_iter().map(|v| v.clamp(eps, 1.0 - eps)).collect())
    }

    /// Wraps values already clamped by the encoder.
    pub(crate) fn from_clamped(values: Vec<f64>) -> Self {
        GammaVector(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn bernoulli_kl_to_mixture(p: f64, m: f64, one_minus_m: f64) -> f64 {
    p * (p / m).ln() + (1.0 - p) * ((1.0 - p) / one_minus_m).ln()
}

/// Jensen-Shannon divergence between `Bernoulli(a)` and `Bernoulli(b)` in
/// nats, in `[0, ln 2]`.
pub fn jsd_term(a: f64, b: f64) -> f64 {
    let m = 0.5 * (a + b);
    let one_minus_m = 0.5 * ((1.0 - a) + (1.0 - b));
    let v = 0.5 * (bernoulli_kl_to_mixture(a, m, one_minus_m) + bernoulli_kl_to_mixture(b, m, one_minus_m));
    v.clamp(0.0, std::f64::consts::LN_2)
}

/// `∂ jsd_term(a, b) / ∂a = ½·log(a(1 − m) / ((1 − a)·m))`.
fn jsd_term_da(a: f64, b: f64) -> f64 {
    let m = 0.5 * (a + b);
    let one_minus_m = 0.5 * ((1.0 - a) + (1.0 - b));
    0.5 * ((a.ln() - (1.0 - a).ln()) - (m.ln() - one_minus_m.ln()))
}

fn check_lengths(a: &[f64], b: &[f64]) -> Result<(), LossError> {
    if a.len() != b.len() {
        return Err(LossError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(())
}

/// Closed-form JSD between two vectors of independent Bernoulli variables,
/// summed over dimensions.
pub fn bernoulli_jsd(g1: &GammaVector, g2: &GammaVector) -> Result<f64, LossError> {
    check_lengths(&g1.0, &g2.0)?;
    Ok(jsd_slices(&g1.0, &g2.0))
}

pub(crate) fn jsd_slices(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| jsd_term(x, y)).sum()
}

/// Gradients of [`bernoulli_jsd`] with respect to both arguments.
pub fn bernoulli_jsd_grad(g1: &GammaVector, g2: &GammaVector) -> Result<(Vec<f64>, Vec<f64>), LossError> {
    check_lengths(&g1.0, &g2.0)?;
    let da = g1.0.iter().zip(&g2.0).map(|(&a, &b)| jsd_term_da(a, b)).collect();
    let db = g1.0.iter().zip(&g2.0).map(|(&a, &b)| jsd_term_da(b, a)).collect();
    Ok((da, db))
}

/// Within-class index pairs of a batch, grouped by class. Only classes with
/// at least two members appear.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ClassPairs {
    groups: Vec<(u8, Vec<(usize, usize)>)>,
}

fn members_by_class(labels: &[u8]) -> BTreeMap<u8, Vec<usize>> {
    let mut map: BTreeMap<u8, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        map.entry(l).or_default().push(i);
    }
    map
}

/// Unordered pair number `k` of `0..n(n−1)/2`, in lexicographic order.
fn unrank_pair(mut k: usize, n: usize) -> (usize, usize) {
    let mut i = 0;
    loop {
        let row = n - 1 - i;
        if k < row {
            return (i, i + 1 + k);
        }
        k -= row;
        i += 1;
    }
}

impl ClassPairs {
    /// Every unordered within-class pair.
    pub fn all(labels: &[u8]) -> Self {
        Self::build(labels, None)
    }

    /// At most `max_pairs` pairs per class, subsampled without replacement
    /// from `rng` when a class has more.
    pub fn capped(labels: &[u8], max_pairs: usize, rng: &mut RngStream) -> Self {
        Self::build(labels, Some((max_pairs, rng)))
    }

    fn build(labels: &[u8], mut cap: Option<(usize, &mut RngStream)>) -> Self {
        let mut groups = Vec::new();
        for (class, members) in members_by_class(labels) {
            let n = members.len();
            if n < 2 {
                continue;
            }
            let total = n * (n - 1) / 2;
            let ranks: Vec<usize> = match cap.as_mut() {
                Some((max, rng)) if total > *max && *max > 0 => {
                    let mut r = rng.sample_indices(total, *max);
                    r.sort_unstable();
                    r
                }
                _ => (0..total).collect(),
            };
            let pairs = ranks
                .into_iter()
                .map(|k| {
                    let (i, j) = unrank_pair(k, n);
                    (members[i], members[j])
                })
                .collect();
            groups.push((class, pairs));
        }
        ClassPairs { groups }
    }

    pub fn num_classes(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn groups(&self) -> &[(u8, Vec<(usize, usize)>)] {
        &self.groups
    }

    pub fn num_pairs(&self) -> usize {
        self.groups.iter().map(|(_, p)| p.len()).sum()
    }

    fn check_rows(&self, gamma: &Tensor2D) -> Result<(), LossError> {
        let max = self.groups.iter().flat_map(|(_, p)| p.iter().map(|&(_, j)| j)).max();
        if let Some(max) = max {
            if max >= gamma.rows() {
                return Err(NnError::ShapeMismatch {
                    op: "class_jsd",
                    left: (max + 1, gamma.cols()),
                    right: gamma.shape(),
                }
                .into());
            }
        }
        Ok(())
    }

    /// Mean over classes of the mean pairwise JSD within each class, for the
    /// `γ` rows of a batch. Zero when no class has a pair.
    pub fn jsd(&self, gamma: &Tensor2D) -> Result<f64, LossError> {
        self.check_rows(gamma)?;
        if self.groups.is_empty() {
            return Ok(0.0);
        }
        let mut sum = 0.0;
        for (_, pairs) in &self.groups {
            let class_sum: f64 = pairs.iter().map(|&(j, k)| jsd_slices(gamma.row(j), gamma.row(k))).sum();
            sum += class_sum / pairs.len() as f64;
        }
        Ok(sum / self.groups.len() as f64)
    }

    /// Gradient of [`ClassPairs::jsd`] with respect to the `γ` matrix.
    pub fn jsd_grad(&self, gamma: &Tensor2D) -> Result<Tensor2D, LossError> {
        self.check_rows(gamma)?;
        let mut grad = Tensor2D::zeros(gamma.rows(), gamma.cols());
        if self.groups.is_empty() {
            return Ok(grad);
        }
        let outer = 1.0 / self.groups.len() as f64;
        for (_, pairs) in &self.groups {
            let w = outer / pairs.len() as f64;
            for &(j, k) in pairs {
                for c in 0..gamma.cols() {
                    let (a, b) = (gamma.get(j, c), gamma.get(k, c));
                    let gj = grad.get(j, c) + w * jsd_term_da(a, b);
                    grad.set(j, c, gj);
                    let gk = grad.get(k, c) + w * jsd_term_da(b, a);
                    grad.set(k, c, gk);
                }
            }
        }
        Ok(grad)
    }
}

/// Class-averaged within-class JSD of a batch of `γ` vectors, over all
/// within-class pairs. Classes with a single member are ignored.
pub fn class_jsd(gammas: &[GammaVector], labels: &[u8]) -> Result<f64, LossError> {
    let d = gammas.first().map_or(0, GammaVector::len);
    let rows: Vec<&[f64]> = gammas.iter().map(|g| g.values()).collect();
    for g in gammas {
        check_lengths(g.values(), &rows[0][..d])?;
    }
    let matrix = Tensor2D::from_rows(&rows)?;
    if labels.len() != gammas.len() {
        return Err(LossError::LengthMismatch {
            left: gammas.len(),
            right: labels.len(),
        });
    }
    ClassPairs::all(labels).jsd(&matrix)
}
