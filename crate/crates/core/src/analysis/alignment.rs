use crate::data::LabeledDataset;
use crate::losses::ClassPairs;
use crate::model::VscModel;
use crate::nn::rng::{Purpose, RngStream};

use super::{encode_gammas, AnalysisError};

/// Pair-sampling stream for alignment scores; kept apart from the
/// per-batch evaluation streams.
const ALIGNMENT_STREAM_INDEX: u64 = 0xFFFF_FFFF;

/// Mean within-class pairwise Bernoulli JSD (nats) of the encoder's `γ`
/// over a dataset.
///
/// Each class contributes the mean over `pairs_per_class` pairs drawn
/// without replacement (every pair, when it has no more than that); the
/// score is the mean over classes with at least two members. Lower means
/// same-class samples share active dimensions.
pub fn alignment_score(
    model: &VscModel,
    dataset: &LabeledDataset,
    pairs_per_class: usize,
    seed: u64,
) -> Result<f64, AnalysisError> {
    if pairs_per_class == 0 {
        return Err(AnalysisError::NoPairs);
    }
    if dataset.is_empty() {
        return Err(AnalysisError::EmptyDataset);
    }
    let gammas = encode_gammas(model, dataset)?;
    let mut rng = RngStream::for_purpose(seed, Purpose::Eval, 0, ALIGNMENT_STREAM_INDEX);
    let pairs = ClassPairs::capped(dataset.labels(), pairs_per_class, &mut rng);
    let score = pairs.jsd(&gammas).expect("pairs index rows of the encoded dataset");
    Ok(score)
}
