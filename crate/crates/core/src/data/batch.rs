use std::collections::VecDeque;

use super::{DataError, LabeledDataset};
use crate::nn::rng::{Purpose, RngStream};

/// An ordered partition of dataset indices into batches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchPlan {
    pub batches: Vec<Vec<usize>>,
    pub batch_size: usize,
    pub seed: u64,
}

impl BatchPlan {
    pub fn len(&self) -> usize {
        self.batches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.batches.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[usize]> {
        self.batches.iter().map(Vec::as_slice)
    }
}

/// Shuffles the dataset into batches of `batch_size` (the last may be short).
///
/// With `class_min_pairs`, indices are first grouped into same-class pairs
/// and every batch is opened with one such pair, so each batch holds at least
/// one class with two members for as long as unused pairs remain.
pub fn make_batches(
    dataset: &LabeledDataset,
    batch_size: usize,
    seed: u64,
    class_min_pairs: bool,
) -> Result<BatchPlan, DataError> {
    if dataset.is_empty() {
        return Err(DataError::EmptyDataset);
    }
    if batch_size < 4 {
        return Err(DataError::BatchTooSmall(batch_size));
    }
    let mut rng = RngStream::for_purpose(seed, Purpose::Shuffle, 0, 0);
    let order = if class_min_pairs {
        stratified_order(dataset, batch_size, &mut rng)
    } else {
        let mut order: Vec<usize> = (0..dataset.len()).collect();
        rng.shuffle(&mut order);
        order
    };
    let batches = order.chunks(batch_size).map(<[usize]>::to_vec).collect();
    Ok(BatchPlan {
        batches,
        batch_size,
        seed,
    })
}

fn stratified_order(dataset: &LabeledDataset, batch_size: usize, rng: &mut RngStream) -> Vec<usize> {
    // units are same-class pairs plus one leftover singleton per odd class
    let mut units: Vec<Vec<usize>> = Vec::new();
    for (_, mut members) in dataset.class_indices() {
        rng.shuffle(&mut members);
        units.extend(members.chunks(2).map(<[usize]>::to_vec));
    }
    rng.shuffle(&mut units);

    let n = dataset.len();
    let sizes: Vec<usize> = (0..n.div_ceil(batch_size))
        .map(|k| batch_size.min(n - k * batch_size))
        .collect();
    let capacity = sizes.iter().filter(|&&s| s >= 2).count();

    // the first `capacity` pair units open one batch each; everything else
    // is poured into the remaining slots in shuffled order
    let mut openers: VecDeque<Vec<usize>> = VecDeque::new();
    let mut filler: VecDeque<usize> = VecDeque::new();
    for unit in units {
        if unit.len() == 2 && openers.len() < capacity {
            openers.push_back(unit);
        } else {
            filler.extend(unit);
        }
    }

    let mut order = Vec::with_capacity(n);
    for size in sizes {
        let mut filled = 0;
        if size >= 2 {
            if let Some(pair) = openers.pop_front() {
                filled = pair.len();
                order.extend(pair);
            }
        }
        while filled < size {
            order.push(filler.pop_front().expect("slot count equals sample count"));
            filled += 1;
        }
    }
    order
}
