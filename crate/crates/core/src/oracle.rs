//! Exhaustive search over every feasible odd allocation. Only usable at desk
//! scale; it exists to check the greedy allocator against ground truth.

use serde::{Deserialize, Serialize};

use crate::allocator::{Allocation, AllocationProblem};
use crate::error::{Error, Result};

pub const DEFAULT_ENUMERATION_CAP: u128 = 10_000_000;

/// Allocations whose objective is within this of the best are reported as ties.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub best_ccr: f64,
    pub best_allocations: Vec<Allocation>,
    pub evaluated_count: u64,
}

/// `((k+1)/2)^J`, the number of odd allocations ignoring the budget.
pub fn unconstrained_count(samples: usize, k: usize) -> u128 {
    let choices = k.div_ceil(2) as u128;
    (0..samples).try_fold(1u128, |acc, _| acc.checked_mul(choices)).unwrap_or(u128::MAX)
}

pub fn exhaustive_optimal(problem: &AllocationProblem, beta: f64, cap: u128) -> Result<OracleResult> {
    let budget_units = problem.budget_units(beta)?;
    let required = unconstrained_count(problem.len(), problem.k());
    if required > cap {
        return Err(Error::CapExceeded { required, cap });
    }

    let mut search = Search {
        problem,
        // Worker units beyond the mandatory one per sample.
        counts: vec![1; problem.len()],
        best_sum: f64::NEG_INFINITY,
        best: Vec::new(),
        evaluated: 0,
    };
    let spare = budget_units - problem.len() as u64;
    search.descend(0, spare, 0.0);

    let samples = problem.len() as f64;
    Ok(OracleResult {
        best_ccr: search.best_sum / samples,
        best_allocations: search
            .best
            .into_iter()
            .map(|(_, counts)| Allocation::new(counts, problem.k()).expect("enumerated allocations are valid"))
            .collect(),
        evaluated_count: search.evaluated,
    })
}

struct Search<'a> {
    problem: &'a AllocationProblem,
    counts: Vec<usize>,
    best_sum: f64,
    best: Vec<(f64, Vec<usize>)>,
    evaluated: u64,
}

impl Search<'_> {
    /// Lexicographic enumeration; `spare` is the number of units left beyond
    /// one worker for each remaining sample.
    fn descend(&mut self, j: usize, spare: u64, partial: f64) {
        if j == self.problem.len() {
            self.evaluated += 1;
            self.offer(partial);
            return;
        }
        let curve = &self.problem.curves()[j];
        let mut n = 1;
        while n <= self.problem.k() && (n as u64 - 1) <= spare {
            self.counts[j] = n;
            self.descend(j + 1, spare - (n as u64 - 1), partial + curve.value(n));
            n += 2;
        }
        self.counts[j] = 1;
    }

    fn offer(&mut self, sum: f64) {
        let samples = self.problem.len() as f64;
        let tie = TIE_TOLERANCE * samples;
        if sum > self.best_sum + tie {
            self.best_sum = sum;
            self.best.clear();
            self.best.push((sum, self.counts.clone()));
        } else if sum >= self.best_sum - tie {
            if sum > self.best_sum {
                self.best_sum = sum;
            }
            self.best.push((sum, self.counts.clone()));
        }
        let floor = self.best_sum - tie;
        self.best.retain(|(s, _)| *s >= floor);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::success::SuccessCurve;

    fn problem(p: &[f64], k: usize) -> AllocationProblem {
        AllocationProblem::from_probabilities(p, k, 1.0).unwrap()
    }

    #[test]
    fn hand_enumerated_fixture() {
        // Feasible at beta = 4: (1,1) 0.75, (3,1) 0.786, (1,3) 0.774.
        let r = exhaustive_optimal(&problem(&[0.9, 0.6], 3), 4.0, DEFAULT_ENUMERATION_CAP).unwrap();
        assert!((r.best_ccr - 0.786).abs() < 1e-12);
        assert_eq!(r.best_allocations, vec![Allocation::new(vec![3, 1], 3).unwrap()]);
        assert_eq!(r.evaluated_count, 3);
    }

    #[test]
    fn full_budget_prefers_all_k() {
        let pr = problem(&[0.9, 0.6, 0.75], 5);
        let r = exhaustive_optimal(&pr, 15.0, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(r.best_allocations, vec![Allocation::uniform(3, 5)]);
        assert_eq!(r.evaluated_count as u128, unconstrained_count(3, 5));
    }

    #[test]
    fn flat_curves_all_tie() {
        let pr = problem(&[0.5, 0.5], 3);
        let r = exhaustive_optimal(&pr, 6.0, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(r.best_ccr, 0.5);
        assert_eq!(r.best_allocations.len(), 4);
    }

    #[test]
    fn errors() {
        let pr = problem(&[0.9, 0.6], 3);
        assert!(matches!(exhaustive_optimal(&pr, 1.5, 100), Err(Error::InfeasibleBudget { .. })));
        let big = problem(&[0.7; 12], 7);
        assert!(matches!(exhaustive_optimal(&big, 20.0, 1000), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn greedy_can_lose_without_concavity() {
        let a = SuccessCurve::from_values(vec![0.5, 0.5, 1.0]).unwrap();
        let b = SuccessCurve::from_values(vec![0.5, 0.6, 0.6]).unwrap();
        let pr = AllocationProblem::new(vec![a, b], 1.0).unwrap();
        let r = exhaustive_optimal(&pr, 6.0, DEFAULT_ENUMERATION_CAP).unwrap();
        assert!((r.best_ccr - 0.75).abs() < 1e-15);
    }
}
