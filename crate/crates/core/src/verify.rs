//! Self-checks behind the `verify` command: greedy against exhaustive
//! search, sorted against step-by-step greedy, binomial curve identities and
//! a few fixed fixtures.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::allocator::{buoca_greedy, buoca_sorted, AllocationProblem, BudgetFrontier};
use crate::error::Result;
use crate::oracle::exhaustive_optimal;
use crate::seeding::rng_for;
use crate::success::{verify_binomial_identities, SuccessCurve};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub seed: u64,
    pub checks: Vec<CheckOutcome>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub seed: u64,
    pub oracle_instances: usize,
    pub sorted_instances: usize,
    pub oracle_cap: u128,
    pub tolerance: f64,
}

impl VerifyConfig {
    pub fn new(seed: u64) -> Self {
        VerifyConfig {
            seed,
            oracle_instances: 100,
            sorted_instances: 100,
            oracle_cap: crate::oracle::DEFAULT_ENUMERATION_CAP,
            tolerance: 1e-12,
        }
    }
}

/// Random instance with `p_j` uniform in `(0.5, 1]` and unit cost 1.
pub fn random_compliant_problem<R: Rng>(
    rng: &mut R,
    samples: std::ops::RangeInclusive<usize>,
    ks: &[usize],
) -> AllocationProblem {
    let j = rng.random_range(samples);
    let k = ks[rng.random_range(0..ks.len())];
    let p: Vec<f64> = (0..j).map(|_| 1.0 - 0.5 * rng.random::<f64>()).collect();
    AllocationProblem::from_probabilities(&p, k, 1.0).expect("valid random instance")
}

/// Largest `|greedy CCR - exhaustive optimum|` over frontier budgets up to
/// and including the plateau step.
pub fn oracle_gap(problem: &AllocationProblem, frontier: &BudgetFrontier, cap: u128) -> Result<f64> {
    let last = frontier.plateau_step().unwrap_or(frontier.len());
    let mut worst: f64 = 0.0;
    for point in frontier.summaries().into_iter().take(last) {
        let best = exhaustive_optimal(problem, point.budget, cap)?;
        worst = worst.max((point.ccr - best.best_ccr).abs());
    }
    Ok(worst)
}

/// Largest `(cost, CCR)` difference between the two allocators.
pub fn trajectory_gap(a: &BudgetFrontier, b: &BudgetFrontier) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.summaries()
        .iter()
        .zip(b.summaries())
        .map(|(x, y)| (x.cost - y.cost).abs().max((x.ccr - y.ccr).abs()))
        .fold(0.0, f64::max)
}

fn outcome(name: &str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome { name: name.to_string(), passed, detail }
}

pub fn run_verification(config: &VerifyConfig) -> Result<VerificationReport> {
    let tol = config.tolerance;
    let mut checks = Vec::new();

    let mut rng = rng_for(config.seed, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..config.oracle_instances {
        let problem = random_compliant_problem(&mut rng, 2..=6, &[3, 5]);
        worst = worst.max(oracle_gap(&problem, &buoca_greedy(&problem), config.oracle_cap)?);
    }
    checks.push(outcome(
        "greedy_matches_exhaustive",
        worst <= tol,
        format!("{} instances, max deviation {worst:e}", config.oracle_instances),
    ));

    let mut rng = rng_for(config.seed, 1);
    let mut worst: f64 = 0.0;
    for _ in 0..config.sorted_instances {
        let problem = random_compliant_problem(&mut rng, 2..=20, &[3, 5, 7, 9]);
        worst = worst.max(trajectory_gap(&buoca_greedy(&problem), &buoca_sorted(&problem)?));
    }
    checks.push(outcome(
        "sorted_matches_greedy",
        worst <= tol,
        format!("{} instances, max deviation {worst:e}", config.sorted_instances),
    ));

    let mut failures = Vec::new();
    let mut checked = 0;
    for i in 1..=99 {
        let p = i as f64 / 100.0;
        for k in (3..=21).step_by(2) {
            checked += 1;
            if !verify_binomial_identities(p, k, tol)?.passed() {
                failures.push(format!("p={p} k={k}"));
            }
        }
    }
    checks.push(outcome(
        "binomial_identities",
        failures.is_empty(),
        if failures.is_empty() { format!("{checked} (p, k) pairs") } else { failures.join("; ") },
    ));

    let fixture = AllocationProblem::from_probabilities(&[0.9, 0.6], 3, 1.0)?;
    let got: Vec<(f64, f64)> = buoca_greedy(&fixture).summaries().iter().map(|s| (s.budget, s.ccr)).collect();
    let expected = [(2.0, 0.75), (4.0, 0.786), (6.0, 0.81)];
    let matches =
        got.len() == 3 && got.iter().zip(expected).all(|(g, e)| (g.0 - e.0).abs() <= tol && (g.1 - e.1).abs() <= tol);
    checks.push(outcome("two_sample_fixture", matches, format!("{got:?}")));

    let bent = AllocationProblem::new(
        vec![SuccessCurve::from_values(vec![0.5, 0.5, 1.0])?, SuccessCurve::from_values(vec![0.5, 0.6, 0.6])?],
        1.0,
    )?;
    let flagged = !bent.greedy_is_optimal(crate::success::DEFAULT_TOLERANCE) && buoca_sorted(&bent).is_err();
    checks.push(outcome(
        "non_concave_fixture_rejected",
        flagged,
        "curve (0.5, 0.5, 1.0) fails the concavity check".to_string(),
    ));

    Ok(VerificationReport { seed: config.seed, checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_run_passes() {
        let config = VerifyConfig { oracle_instances: 10, sorted_instances: 10, ..VerifyConfig::new(5) };
        let report = run_verification(&config).unwrap();
        assert!(report.passed(), "{report:?}");
        assert_eq!(report.checks.len(), 5);
    }

    #[test]
    fn gap_is_detected_on_non_concave_curves() {
        // Greedy spends on the second curve first and reaches 0.55 at budget 6,
        // where (5, 1) scores 0.75.
        let bent = AllocationProblem::new(
            vec![
                SuccessCurve::from_values(vec![0.5, 0.5, 1.0]).unwrap(),
                SuccessCurve::from_values(vec![0.5, 0.55, 0.6]).unwrap(),
            ],
            1.0,
        )
        .unwrap();
        let gap = oracle_gap(&bent, &buoca_greedy(&bent), 1000).unwrap();
        assert!(gap > 0.1);
    }
}
