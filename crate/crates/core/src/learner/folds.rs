use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding::rng_for;

/// Fold index for every row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    folds: usize,
    assignments: Vec<usize>,
}

impl FoldPlan {
    pub fn folds(&self) -> usize {
        self.folds
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] != fold).collect()
    }

    /// `counts[class][fold]` for each distinct label, classes ascending.
    pub fn class_fold_counts(&self, labels: &[usize]) -> BTreeMap<usize, Vec<usize>> {
        let mut counts: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (&label, &fold) in labels.iter().zip(&self.assignments) {
            counts.entry(label).or_insert_with(|| vec![0; self.folds])[fold] += 1;
        }
        counts
    }
}

/// Shuffle each class with `seed` and deal its members round-robin over the
/// folds. The dealing position carries over from one class to the next so
/// remainders spread across folds.
pub fn stratified_kfold(labels: &[usize], folds: usize, seed: u64) -> Result<FoldPlan> {
    if folds < 2 {
        return Err(Error::validation(format!("need at least 2 folds, got {folds}")));
    }
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &label) in labels.iter().enumerate() {
        by_class.entry(label).or_default().push(i);
    }

    let mut rng = rng_for(seed, 0);
    let mut assignments = vec![0; labels.len()];
    let mut next = 0;
    for members in by_class.values_mut() {
        members.shuffle(&mut rng);
        for &i in members.iter() {
            assignments[i] = next;
            next = (next + 1) % folds;
        }
    }
    Ok(FoldPlan { folds, assignments })
}
