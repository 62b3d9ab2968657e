use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{
    cross_validated_predictions, stratified_kfold, AllocationLabelSet, ForestSettings, MaxFeatures, RandomForest,
};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamGrid {
    pub trees: Vec<usize>,
    pub max_depth: Vec<usize>,
    pub max_features: Vec<MaxFeatures>,
}

impl Default for ParamGrid {
    fn default() -> Self {
        ParamGrid {
            trees: vec![50, 100],
            max_depth: vec![4, 8, 12],
            max_features: vec![MaxFeatures::Sqrt, MaxFeatures::All],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub settings: ForestSettings,
    pub balanced_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub best: ForestSettings,
    pub points: Vec<GridPoint>,
}

/// Mean per-class recall over the classes present in `truth`.
pub fn balanced_accuracy(truth: &[usize], predicted: &[usize]) -> f64 {
    let mut hits: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for (&t, &p) in truth.iter().zip(predicted) {
        let entry = hits.entry(t).or_default();
        entry.1 += 1;
        if t == p {
            entry.0 += 1;
        }
    }
    if hits.is_empty() {
        return 0.0;
    }
    hits.values().map(|&(h, n)| h as f64 / n as f64).sum::<f64>() / hits.len() as f64
}

/// Scores every combination by cross-validated balanced accuracy. The first
/// combination in grid order wins ties.
pub fn grid_search(
    features: &FeatureMatrix,
    labels: &AllocationLabelSet,
    grid: &ParamGrid,
    base: ForestSettings,
    folds: usize,
    seed: u64,
) -> Result<GridSearchResult> {
    if grid.trees.is_empty() || grid.max_depth.is_empty() || grid.max_features.is_empty() {
        return Err(Error::validation("every grid axis needs at least one value"));
    }
    let plan = stratified_kfold(&labels.labels, folds, seed)?;
    let mut points = Vec::new();
    for &trees in &grid.trees {
        for &max_depth in &grid.max_depth {
            for &max_features in &grid.max_features {
                let settings = ForestSettings { trees, max_depth, max_features, ..base };
                let predicted =
                    cross_validated_predictions(&RandomForest(settings), features, &labels.labels, &plan, base.seed)?;
                points.push(GridPoint { settings, balanced_accuracy: balanced_accuracy(&labels.labels, &predicted) });
            }
        }
    }
    let mut best = 0;
    for (i, point) in points.iter().enumerate() {
        if point.balanced_accuracy > points[best].balanced_accuracy {
            best = i;
        }
    }
    Ok(GridSearchResult { best: points[best].settings, points })
}
