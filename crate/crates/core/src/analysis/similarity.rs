use std::fmt;
use std::str::FromStr;

use crate::data::DatasetTag;
use crate::nn::Tensor2D;

use super::{AnalysisError, ClassProbMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Pearson,
    CosineDistance,
    Euclidean,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Pearson, Metric::CosineDistance, Metric::Euclidean];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Pearson => "pearson",
            Metric::CosineDistance => "cosine_distance",
            Metric::Euclidean => "euclidean",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = AnalysisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| AnalysisError::Parse {
                what: "metric",
                detail: format!("unknown metric {s:?}"),
            })
    }
}

/// Symmetric class-by-class comparison of the rows of a
/// [`ClassProbMatrix`].
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    pub metric: Metric,
    pub classes: Vec<u8>,
    pub values: Tensor2D,
    /// Classes whose row has zero variance. Pearson entries against them are
    /// undefined and reported as 0 (the diagonal stays 1).
    pub degenerate: Vec<u8>,
}

impl SimilarityMatrix {
    pub fn entry(&self, a: u8, b: u8) -> Option<f64> {
        let i = self.classes.iter().position(|&c| c == a)?;
        let j = self.classes.iter().position(|&c| c == b)?;
        Some(self.values.get(i, j))
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn centred(xs: &[f64]) -> Option<Vec<f64>> {
    let m = mean(xs);
    let c: Vec<f64> = xs.iter().map(|x| x - m).collect();
    let ss: f64 = c.iter().map(|v| v * v).sum();
    (ss > 0.0).then_some(c)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let denom = (dot(a, a) * dot(b, b)).sqrt();
    if denom == 0.0 {
        0.0
    } else {
        (dot(a, b) / denom).clamp(-1.0, 1.0)
    }
}

pub fn similarity_matrix(m: &ClassProbMatrix, metric: Metric) -> Result<SimilarityMatrix, AnalysisError> {
    let k = m.num_classes();
    if k < 2 {
        return Err(AnalysisError::TooFewClasses { needed: 2, found: k });
    }
    let rows: Vec<&[f64]> = m.values.iter_rows().collect();
    let centred_rows: Vec<Option<Vec<f64>>> = rows.iter().map(|r| centred(r)).collect();
    let mut degenerate = Vec::new();
    if metric == Metric::Pearson {
        for (c, row) in m.classes.iter().zip(&centred_rows) {
            if row.is_none() {
                log::warn!("class {c} has a constant gamma row; its Pearson entries are set to 0");
                degenerate.push(*c);
            }
        }
    }

    let mut values = Tensor2D::zeros(k, k);
    for i in 0..k {
        values.set(i, i, if metric == Metric::Pearson { 1.0 } else { 0.0 });
        for j in (i + 1)..k {
            let v = match metric {
                Metric::Pearson => match (&centred_rows[i], &centred_rows[j]) {
                    (Some(a), Some(b)) => cosine(a, b),
                    _ => 0.0,
                },
                Metric::CosineDistance => (1.0 - cosine(rows[i], rows[j])).max(0.0),
                Metric::Euclidean => rows[i].iter().zip(rows[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
            };
            values.set(i, j, v);
            values.set(j, i, v);
        }
    }
    Ok(SimilarityMatrix {
        metric,
        classes: m.classes.clone(),
        values,
        degenerate,
    })
}

/// All three matrices, in [`Metric::ALL`] order.
pub fn similarity_matrices(m: &ClassProbMatrix) -> Result<[SimilarityMatrix; 3], AnalysisError> {
    Ok([
        similarity_matrix(m, Metric::Pearson)?,
        similarity_matrix(m, Metric::CosineDistance)?,
        similarity_matrix(m, Metric::Euclidean)?,
    ])
}

/// Coarse garment category of a Fashion-MNIST class: shoes (sandal,
/// sneaker, ankle boot), tops (t-shirt, pullover, dress, coat, shirt), and
/// trousers and bags each on their own.
fn fashion_category(class: u8) -> u8 {
    match class {
        5 | 7 | 9 => 0,
        0 | 2 | 3 | 4 | 6 => 1,
        1 => 2,
        _ => 3,
    }
}

/// Mean entry over same-category class pairs and over cross-category pairs,
/// as `(within, cross)`. Only defined for Fashion-MNIST matrices with at
/// least one pair of each kind.
pub fn category_contrast(s: &SimilarityMatrix, tag: DatasetTag) -> Option<(f64, f64)> {
    if tag != DatasetTag::FashionMnist {
        return None;
    }
    let (mut within, mut cross) = (Vec::new(), Vec::new());
    for i in 0..s.classes.len() {
        for j in (i + 1)..s.classes.len() {
            let v = s.values.get(i, j);
            if fashion_category(s.classes[i]) == fashion_category(s.classes[j]) {
                within.push(v);
            } else {
                cross.push(v);
            }
        }
    }
    (!within.is_empty() && !cross.is_empty()).then(|| (mean(&within), mean(&cross)))
}
