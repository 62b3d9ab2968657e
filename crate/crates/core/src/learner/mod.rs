//! Allocation-class learning: predict how many workers a sample needs from
//! its features, using frontier allocations as training labels.

mod deploy;
mod folds;
mod forest;
mod grid;

use serde::{Deserialize, Serialize};

pub use deploy::{
    cross_validated_deployment, cross_validated_deployment_with, cross_validated_predictions, DeploymentReport,
    FoldOutcome, ReferenceSummary,
};
pub use folds::{stratified_kfold, FoldPlan};
pub use forest::{train, AllocationModel, ClassWeighting, ForestSettings, MaxFeatures, RandomForest, MODEL_FORMAT};
pub use grid::{balanced_accuracy, grid_search, GridPoint, GridSearchResult, ParamGrid};

use crate::allocator::FrontierPoint;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// Where a label set came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub budget: f64,
    pub step: usize,
}

/// Per-sample worker counts used as class labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationLabelSet {
    pub labels: Vec<usize>,
    pub provenance: Option<Provenance>,
}

impl AllocationLabelSet {
    pub fn new(labels: Vec<usize>) -> Self {
        AllocationLabelSet { labels, provenance: None }
    }

    pub fn from_point(point: &FrontierPoint) -> Self {
        AllocationLabelSet {
            labels: point.allocation.as_slice().to_vec(),
            provenance: Some(Provenance { budget: point.budget, step: point.step }),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Every label odd and at most `k`.
    pub fn validate(&self, k: usize) -> Result<()> {
        match self.labels.iter().find(|&&n| n % 2 == 0 || n > k) {
            Some(n) => Err(Error::validation(format!("allocation label {n} is not an odd count in [1, {k}]"))),
            None => Ok(()),
        }
    }
}

/// Anything that maps a feature row to an allocation class.
pub trait AllocationPredictor {
    fn classes(&self) -> &[usize];
    fn feature_names(&self) -> &[String];
    fn predict_row(&self, row: &[f64]) -> usize;
}

/// Something that fits an [`AllocationPredictor`].
pub trait AllocationLearner {
    type Model: AllocationPredictor;

    fn fit(&self, features: &FeatureMatrix, labels: &[usize], seed: u64) -> Result<Self::Model>;
}

pub fn predict<M: AllocationPredictor + ?Sized>(model: &M, features: &FeatureMatrix) -> Result<AllocationLabelSet> {
    if features.columns() != model.feature_names() {
        return Err(Error::Schema(format!(
            "model expects {} columns ({}), got {} ({})",
            model.feature_names().len(),
            preview(model.feature_names()),
            features.width(),
            preview(features.columns())
        )));
    }
    Ok(AllocationLabelSet::new(features.rows().iter().map(|row| model.predict_row(row)).collect()))
}

fn preview(columns: &[String]) -> String {
    let mut shown: Vec<&str> = columns.iter().take(3).map(String::as_str).collect();
    if columns.len() > 3 {
        shown.push("...");
    }
    shown.join(", ")
}
