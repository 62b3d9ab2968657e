use serde::{Deserialize, Serialize};

use super::{predict, stratified_kfold, AllocationLearner, FoldPlan, ForestSettings, RandomForest};
use crate::allocator::{Allocation, FrontierPoint};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::pilot::PilotDataset;
use crate::seeding::derive_seed;
use crate::simulator::{exact_subset_accuracy, TieRule};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldOutcome {
    pub fold: usize,
    pub rows: usize,
    pub cost: f64,
    pub accuracy: f64,
    /// Share of rows whose predicted class equals the reference label.
    pub label_agreement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSummary {
    pub step: usize,
    pub budget: f64,
    pub cost: f64,
    pub ccr: f64,
    pub simulated_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeploymentReport {
    pub folds: usize,
    pub seed: u64,
    pub tie_rule: TieRule,
    pub per_fold: Vec<FoldOutcome>,
    pub predicted: Vec<usize>,
    pub spent_units: u64,
    pub spent_cost: f64,
    pub simulated_accuracy: f64,
    pub label_agreement: f64,
    pub reference: ReferenceSummary,
}

/// Out-of-fold predictions: each fold is predicted by a model fitted on the
/// other folds, seeded with `derive_seed(seed, fold)`.
pub fn cross_validated_predictions<L: AllocationLearner>(
    learner: &L,
    features: &FeatureMatrix,
    labels: &[usize],
    plan: &FoldPlan,
    seed: u64,
) -> Result<Vec<usize>> {
    if features.len() != labels.len() || plan.assignments().len() != labels.len() {
        return Err(Error::Alignment(format!(
            "{} feature rows, {} labels, {} fold assignments",
            features.len(),
            labels.len(),
            plan.assignments().len()
        )));
    }
    let mut predicted = vec![0; labels.len()];
    for fold in 0..plan.folds() {
        let test = plan.test_indices(fold);
        if test.is_empty() {
            continue;
        }
        let train = plan.train_indices(fold);
        let train_labels: Vec<usize> = train.iter().map(|&i| labels[i]).collect();
        let model = learner.fit(&features.select(&train), &train_labels, derive_seed(seed, fold as u64))?;
        let out = predict(&model, &features.select(&test))?;
        for (&i, label) in test.iter().zip(out.labels) {
            predicted[i] = label;
        }
    }
    Ok(predicted)
}

/// Cross-validated deployment with the tree ensemble. Folds are drawn with
/// `seed`; per-fold models are seeded from `settings.seed`.
pub fn cross_validated_deployment(
    data: &PilotDataset,
    features: &FeatureMatrix,
    reference: &FrontierPoint,
    folds: usize,
    seed: u64,
    settings: &ForestSettings,
    tie_rule: TieRule,
) -> Result<DeploymentReport> {
    cross_validated_deployment_with(
        &RandomForest(*settings),
        settings.seed,
        data,
        features,
        reference,
        folds,
        seed,
        tie_rule,
    )
}

#[allow(clippy::too_many_arguments)]
pub fn cross_validated_deployment_with<L: AllocationLearner>(
    learner: &L,
    model_seed: u64,
    data: &PilotDataset,
    features: &FeatureMatrix,
    reference: &FrontierPoint,
    folds: usize,
    seed: u64,
    tie_rule: TieRule,
) -> Result<DeploymentReport> {
    let labels = reference.allocation.as_slice();
    if labels.len() != data.len() {
        return Err(Error::Alignment(format!(
            "reference allocation covers {} samples, pilot has {}",
            labels.len(),
            data.len()
        )));
    }
    let features = features.align_to(data.sample_ids())?;
    let plan = stratified_kfold(labels, folds, seed)?;
    let predicted = cross_validated_predictions(learner, &features, labels, &plan, model_seed)?;

    let k = data.k();
    let deployed = Allocation::new(predicted.clone(), k)?;
    let simulated = exact_subset_accuracy(data, &deployed, tie_rule)?;
    let reference_sim = exact_subset_accuracy(data, &reference.allocation, tie_rule)?;
    let c = data.unit_cost();

    let agreement = |rows: &[usize]| {
        if rows.is_empty() {
            return 0.0;
        }
        rows.iter().filter(|&&i| predicted[i] == labels[i]).count() as f64 / rows.len() as f64
    };
    let per_fold = (0..plan.folds())
        .map(|fold| {
            let rows = plan.test_indices(fold);
            let units: usize = rows.iter().map(|&i| predicted[i]).sum();
            FoldOutcome {
                fold,
                rows: rows.len(),
                cost: c * units as f64,
                accuracy: simulated.mean_over(&rows),
                label_agreement: agreement(&rows),
            }
        })
        .collect();
    let all: Vec<usize> = (0..labels.len()).collect();

    Ok(DeploymentReport {
        folds,
        seed,
        tie_rule,
        per_fold,
        spent_units: simulated.total_units,
        spent_cost: simulated.total_cost,
        simulated_accuracy: simulated.mean_accuracy,
        label_agreement: agreement(&all),
        predicted,
        reference: ReferenceSummary {
            step: reference.step,
            budget: reference.budget,
            cost: reference.cost,
            ccr: reference.ccr,
            simulated_accuracy: reference_sim.mean_accuracy,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocator::{buoca_greedy, AllocationProblem};
    use crate::learner::AllocationPredictor;
    use crate::pilot::estimate_success_probabilities;

    struct Constant {
        names: Vec<String>,
        classes: Vec<usize>,
    }

    impl AllocationPredictor for Constant {
        fn classes(&self) -> &[usize] {
            &self.classes
        }
        fn feature_names(&self) -> &[String] {
            &self.names
        }
        fn predict_row(&self, _: &[f64]) -> usize {
            self.classes[0]
        }
    }

    struct AlwaysOne;

    impl AllocationLearner for AlwaysOne {
        type Model = Constant;
        fn fit(&self, features: &FeatureMatrix, _: &[usize], _: u64) -> Result<Constant> {
            Ok(Constant { names: features.columns().to_vec(), classes: vec![1] })
        }
    }

    /// Deterministic pilot where sample j has `j % 8` of 7 workers correct.
    fn fixture(samples: usize) -> PilotDataset {
        let ids: Vec<String> = (0..samples).map(|j| format!("s{j}")).collect();
        let experts = vec!["pos".to_string(); samples];
        let workers =
            (0..samples).map(|j| (0..7).map(|w| if w < j % 8 { "pos" } else { "neg" }.to_string()).collect()).collect();
        PilotDataset::new(ids, experts, workers, 7, 1.0, None).unwrap()
    }

    fn reference(data: &PilotDataset, step: usize) -> FrontierPoint {
        let problem = AllocationProblem::from_estimates(&estimate_success_probabilities(data), None, 1.0).unwrap();
        buoca_greedy(&problem).point(step).unwrap()
    }

    fn leaked(point: &FrontierPoint, data: &PilotDataset) -> FeatureMatrix {
        let rows = point.allocation.as_slice().iter().map(|&n| vec![n as f64]).collect();
        FeatureMatrix::new(data.sample_ids().to_vec(), vec!["label".into()], rows).unwrap()
    }

    #[test]
    fn leaked_labels_recover_the_reference() {
        let data = fixture(600);
        let point = reference(&data, 400);
        let settings = ForestSettings { trees: 10, ..ForestSettings::new(1) };
        let report =
            cross_validated_deployment(&data, &leaked(&point, &data), &point, 5, 7, &settings, TieRule::Fractional)
                .unwrap();
        assert!((report.spent_cost - point.cost).abs() <= 0.02 * point.cost);
        assert_eq!(report.label_agreement, 1.0);
        assert!((report.simulated_accuracy - report.reference.simulated_accuracy).abs() < 1e-12);
    }

    #[test]
    fn constant_one_costs_c_j_and_scores_mean_p() {
        let data = fixture(80);
        let point = reference(&data, 60);
        let features = leaked(&point, &data);
        let report =
            cross_validated_deployment_with(&AlwaysOne, 0, &data, &features, &point, 5, 3, TieRule::Fractional)
                .unwrap();
        assert_eq!(report.spent_units, 80);
        let mean_p: f64 = estimate_success_probabilities(&data).probabilities().iter().sum::<f64>() / 80.0;
        assert!((report.simulated_accuracy - mean_p).abs() < 1e-12);
        assert_eq!(report.per_fold.iter().map(|f| f.rows).sum::<usize>(), 80);
    }

    #[test]
    fn spent_cost_is_bounded() {
        let data = fixture(120);
        let point = reference(&data, 150);
        let rows = (0..120).map(|j| vec![(j * 37 % 11) as f64]).collect();
        let noise = FeatureMatrix::new(data.sample_ids().to_vec(), vec!["noise".into()], rows).unwrap();
        let settings = ForestSettings { trees: 5, ..ForestSettings::new(2) };
        let report = cross_validated_deployment(&data, &noise, &point, 5, 1, &settings, TieRule::Fractional).unwrap();
        assert!((120..=840).contains(&report.spent_units));
    }

    #[test]
    fn misaligned_inputs_fail() {
        let data = fixture(20);
        let point = reference(&data, 5);
        let short = FeatureMatrix::new(vec!["s0".into()], vec!["f".into()], vec![vec![0.0]]).unwrap();
        let settings = ForestSettings::new(0);
        assert!(matches!(
            cross_validated_deployment(&data, &short, &point, 5, 0, &settings, TieRule::Fractional),
            Err(Error::Alignment(_))
        ));
    }
}
