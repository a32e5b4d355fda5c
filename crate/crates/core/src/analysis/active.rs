use std::collections::{BTreeMap, BTreeSet};

use super::{AnalysisError, ClassProbMatrix};

/// Default activity cutoff: the Bernoulli decision boundary.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ActiveSets {
    /// Dimensions whose class-mean `γ` exceeds the threshold, per class.
    pub per_class: BTreeMap<u8, BTreeSet<usize>>,
    /// Dimensions active for every class.
    pub global: BTreeSet<usize>,
    /// Dimensions active for this class and no other.
    pub class_specific: BTreeMap<u8, BTreeSet<usize>>,
}

impl ActiveSets {
    pub fn has_class_specific(&self) -> bool {
        self.class_specific.values().any(|s| !s.is_empty())
    }

    /// Dimensions active for no class at all.
    pub fn inactive(&self, latent_dim: usize) -> BTreeSet<usize> {
        let used: BTreeSet<usize> = self.per_class.values().flatten().copied().collect();
        (0..latent_dim).filter(|i| !used.contains(i)).collect()
    }
}

pub fn active_dimension_sets(m: &ClassProbMatrix, threshold: f64) -> Result<ActiveSets, AnalysisError> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(AnalysisError::BadThreshold(threshold));
    }
    let per_class: BTreeMap<u8, BTreeSet<usize>> = m
        .classes
        .iter()
        .zip(m.values.iter_rows())
        .map(|(&c, row)| (c, row.iter().enumerate().filter(|(_, &g)| g > threshold).map(|(i, _)| i).collect()))
        .collect();

    let mut sets = per_class.values();
    let global = match sets.next() {
        Some(first) => sets.fold(first.clone(), |acc, s| acc.intersection(s).copied().collect()),
        None => BTreeSet::new(),
    };

    let class_specific = per_class
        .iter()
        .map(|(&c, own)| {
            let others: BTreeSet<usize> = per_class
                .iter()
                .filter(|(&o, _)| o != c)
                .flat_map(|(_, s)| s.iter().copied())
                .collect();
            (c, own.difference(&others).copied().collect())
        })
        .collect();

    Ok(ActiveSets {
        per_class,
        global,
        class_specific,
    })
}
