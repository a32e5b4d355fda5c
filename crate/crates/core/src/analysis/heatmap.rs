use std::collections::BTreeMap;

use crate::data::{DatasetTag, LabeledDataset};
use crate::model::VscModel;
use crate::nn::Tensor2D;

use super::AnalysisError;

const ENCODE_CHUNK: usize = 256;

/// Mean `γ` per class: one row per class present, `d` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassProbMatrix {
    pub classes: Vec<u8>,
    pub values: Tensor2D,
    pub tag: DatasetTag,
}

impl ClassProbMatrix {
    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn latent_dim(&self) -> usize {
        self.values.cols()
    }

    /// The row for `class`, if that class was present.
    pub fn row_of(&self, class: u8) -> Option<&[f64]> {
        self.classes.iter().position(|&c| c == class).map(|i| self.values.row(i))
    }
}

/// Encodes every image and returns the `n × d` matrix of spike probabilities.
pub fn encode_gammas(model: &VscModel, dataset: &LabeledDataset) -> Result<Tensor2D, AnalysisError> {
    let d = model.config().latent_dim;
    let mut out = Vec::with_capacity(dataset.len() * d);
    let order: Vec<usize> = (0..dataset.len()).collect();
    for chunk in order.chunks(ENCODE_CHUNK) {
        let post = model.encode(&dataset.images().select_rows(chunk))?;
        out.extend_from_slice(post.gamma.as_slice());
    }
    Ok(Tensor2D::from_vec(dataset.len(), d, out).map_err(crate::model::ModelError::from)?)
}

/// Averages `γ` over the samples of each class, classes in ascending label
/// order.
pub fn class_gamma_matrix(model: &VscModel, dataset: &LabeledDataset) -> Result<ClassProbMatrix, AnalysisError> {
    if dataset.is_empty() {
        return Err(AnalysisError::EmptyDataset);
    }
    let gammas = encode_gammas(model, dataset)?;
    let d = gammas.cols();
    let mut sums: BTreeMap<u8, (Vec<f64>, usize)> = BTreeMap::new();
    for (row, &label) in gammas.iter_rows().zip(dataset.labels()) {
        let (acc, n) = sums.entry(label).or_insert_with(|| (vec![0.0; d], 0));
        acc.iter_mut().zip(row).for_each(|(a, g)| *a += g);
        *n += 1;
    }
    let classes: Vec<u8> = sums.keys().copied().collect();
    let mut values = Vec::with_capacity(classes.len() * d);
    for (acc, n) in sums.values() {
        values.extend(acc.iter().map(|a| a / *n as f64));
    }
    Ok(ClassProbMatrix {
        values: Tensor2D::from_vec(classes.len(), d, values).expect("rows × d values"),
        classes,
        tag: dataset.tag(),
    })
}

/// Mean over samples of the fraction of dimensions whose `γ` exceeds
/// `threshold`.
pub fn mean_active_fraction(
    model: &VscModel,
    dataset: &LabeledDataset,
    threshold: f64,
) -> Result<f64, AnalysisError> {
    if dataset.is_empty() {
        return Err(AnalysisError::EmptyDataset);
    }
    let gammas = encode_gammas(model, dataset)?;
    let active = gammas.as_slice().iter().filter(|&&g| g > threshold).count();
    Ok(active as f64 / gammas.len() as f64)
}
