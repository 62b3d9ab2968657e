//! Greedy budget-optimized worker allocation.
//!
//! Starting from one worker per sample, every step adds two workers to the
//! sample with the largest gain `q_j(n_j + 2) - q_j(n_j)`. Each step raises the
//! budget by `2c` whether or not anything was added, so the frontier has
//! exactly `1 + J(k-1)/2` points, from `cJ` to `kcJ`.
//!
//! Costs are tracked in integer worker units; money is `unit_cost * units`.

use std::cmp::Ordering;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pilot::SuccessEstimates;
use crate::success::{binomial_success_curve, classify_curve, CurveClass, SuccessCurve, DEFAULT_TOLERANCE};

/// Slack applied when converting a monetary budget into whole worker units.
const BUDGET_SLACK: f64 = 1e-9;

/// Per-sample odd worker counts in `[1, k]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Allocation(Vec<usize>);

impl Allocation {
    pub fn new(counts: Vec<usize>, k: usize) -> Result<Self> {
        if let Some((j, n)) = counts.iter().enumerate().find(|(_, &n)| n % 2 == 0 || n > k) {
            return Err(Error::validation(format!(
                "allocation for sample {j} is {n}; counts must be odd and within [1, {k}]"
            )));
        }
        Ok(Allocation(counts))
    }

    pub fn uniform(samples: usize, n: usize) -> Self {
        Allocation(vec![n; samples])
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Total number of workers hired.
    pub fn units(&self) -> u64 {
        self.0.iter().map(|&n| n as u64).sum()
    }

    /// `(n, count)` for every odd `n` in `[1, k]`.
    pub fn class_counts(&self, k: usize) -> Vec<(usize, usize)> {
        let mut counts = vec![0usize; k.div_ceil(2)];
        for &n in &self.0 {
            counts[n / 2] += 1;
        }
        counts.into_iter().enumerate().map(|(i, c)| (2 * i + 1, c)).collect()
    }
}

impl std::ops::Index<usize> for Allocation {
    type Output = usize;

    fn index(&self, j: usize) -> &usize {
        &self.0[j]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationProblem {
    curves: Vec<SuccessCurve>,
    unit_cost: f64,
    k: usize,
}

impl AllocationProblem {
    pub fn new(curves: Vec<SuccessCurve>, unit_cost: f64) -> Result<Self> {
        let Some(first) = curves.first() else {
            return Err(Error::validation("allocation problem needs at least one sample"));
        };
        let k = first.k();
        if let Some(j) = curves.iter().position(|c| c.k() != k) {
            return Err(Error::validation(format!("curve {j} has k = {}, expected {k}", curves[j].k())));
        }
        if !(unit_cost.is_finite() && unit_cost > 0.0) {
            return Err(Error::validation(format!("unit cost must be positive, got {unit_cost}")));
        }
        Ok(AllocationProblem { curves, unit_cost, k })
    }

    /// Binomial majority-vote curves for each probability.
    pub fn from_probabilities(p: &[f64], k: usize, unit_cost: f64) -> Result<Self> {
        let curves = p.iter().map(|&p| binomial_success_curve(p, k)).collect::<Result<Vec<_>>>()?;
        Self::new(curves, unit_cost)
    }

    /// Binomial curves from pilot estimates. `k_max` extends the curves past the
    /// pilot `k`, which extrapolates the i.i.d. worker model.
    pub fn from_estimates(estimates: &SuccessEstimates, k_max: Option<usize>, unit_cost: f64) -> Result<Self> {
        let pilot_k = estimates.iter().next().map(|e| e.k).unwrap_or(1);
        let k = k_max.unwrap_or(pilot_k);
        if k < pilot_k {
            return Err(Error::validation(format!("k_max {k} is below the pilot k {pilot_k}")));
        }
        Self::from_probabilities(&estimates.probabilities(), k, unit_cost)
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn unit_cost(&self) -> f64 {
        self.unit_cost
    }

    pub fn curves(&self) -> &[SuccessCurve] {
        &self.curves
    }

    pub fn classify(&self, tol: f64) -> Vec<CurveClass> {
        self.curves.iter().map(|c| classify_curve(c, tol)).collect()
    }

    /// True when every curve is non-increasing, or non-decreasing and concave.
    pub fn greedy_is_optimal(&self, tol: f64) -> bool {
        self.curves.iter().all(|c| classify_curve(c, tol).is_greedy_safe())
    }

    /// Number of frontier points, `1 + J(k-1)/2`.
    pub fn frontier_len(&self) -> usize {
        1 + self.len() * (self.k - 1) / 2
    }

    /// Whole worker units affordable under `beta`; errors below `cJ`.
    pub fn budget_units(&self, beta: f64) -> Result<u64> {
        let minimum = self.len() as f64 * self.unit_cost;
        let units = (beta / self.unit_cost + BUDGET_SLACK).floor();
        if units.is_nan() || units < self.len() as f64 {
            return Err(Error::InfeasibleBudget { budget: beta, minimum });
        }
        Ok(units as u64)
    }

    fn check(&self, alloc: &Allocation) -> Result<()> {
        if alloc.len() != self.len() {
            return Err(Error::validation(format!(
                "allocation has {} entries, problem has {} samples",
                alloc.len(),
                self.len()
            )));
        }
        Allocation::new(alloc.0.clone(), self.k).map(|_| ())
    }
}

/// `c * sum(n_j)`.
pub fn cost(alloc: &Allocation, unit_cost: f64) -> f64 {
    unit_cost * alloc.units() as f64
}

/// Mean majority-vote success over all samples.
pub fn ccr(alloc: &Allocation, problem: &AllocationProblem) -> Result<f64> {
    problem.check(alloc)?;
    let total: f64 = problem.curves.iter().zip(alloc.as_slice()).map(|(c, &n)| c.value(n)).sum();
    Ok(total / problem.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Step {
    budget_units: u64,
    cost_units: u64,
    ccr: f64,
    /// Sample that received two more workers on the way into this step.
    incremented: Option<usize>,
}

/// A materialized frontier point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub step: usize,
    pub budget: f64,
    pub budget_units: u64,
    pub cost: f64,
    pub cost_units: u64,
    pub ccr: f64,
    pub allocation: Allocation,
}

/// `(m, budget, cost, ccr)` without the allocation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub step: usize,
    pub budget: f64,
    pub cost: f64,
    pub ccr: f64,
}

/// Every greedy step from `cJ` to `kcJ`. Allocations are stored as the
/// sequence of increments and replayed on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetFrontier {
    samples: usize,
    k: usize,
    unit_cost: f64,
    steps: Vec<Step>,
    plateau_step: Option<usize>,
}

impl BudgetFrontier {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn unit_cost(&self) -> f64 {
        self.unit_cost
    }

    /// First step at which no sample had a strictly positive gain.
    pub fn plateau_step(&self) -> Option<usize> {
        self.plateau_step
    }

    pub fn summaries(&self) -> Vec<PointSummary> {
        self.steps
            .iter()
            .enumerate()
            .map(|(i, s)| PointSummary {
                step: i + 1,
                budget: self.money(s.budget_units),
                cost: self.money(s.cost_units),
                ccr: s.ccr,
            })
            .collect()
    }

    /// Visit every point in order with its allocation.
    pub fn walk(&self, mut visit: impl FnMut(PointSummary, &[usize])) {
        let mut counts = vec![1usize; self.samples];
        for (i, s) in self.steps.iter().enumerate() {
            if let Some(j) = s.incremented {
                counts[j] += 2;
            }
            let summary = PointSummary {
                step: i + 1,
                budget: self.money(s.budget_units),
                cost: self.money(s.cost_units),
                ccr: s.ccr,
            };
            visit(summary, &counts);
        }
    }

    /// Point `m` (1-based).
    pub fn point(&self, step: usize) -> Option<FrontierPoint> {
        if step == 0 || step > self.steps.len() {
            return None;
        }
        let mut counts = vec![1usize; self.samples];
        for s in &self.steps[..step] {
            if let Some(j) = s.incremented {
                counts[j] += 2;
            }
        }
        let s = self.steps[step - 1];
        Some(FrontierPoint {
            step,
            budget: self.money(s.budget_units),
            budget_units: s.budget_units,
            cost: self.money(s.cost_units),
            cost_units: s.cost_units,
            ccr: s.ccr,
            allocation: Allocation(counts),
        })
    }

    pub fn last(&self) -> FrontierPoint {
        self.point(self.steps.len()).expect("frontier is never empty")
    }

    /// Largest-budget point not exceeding `beta`.
    pub fn at_budget(&self, beta: f64) -> Result<FrontierPoint> {
        let minimum = self.samples as f64 * self.unit_cost;
        let units = (beta / self.unit_cost + BUDGET_SLACK).floor();
        if units.is_nan() || units < self.samples as f64 {
            return Err(Error::InfeasibleBudget { budget: beta, minimum });
        }
        let extra = (units as u64 - self.samples as u64) / 2;
        let step = (extra as usize + 1).min(self.steps.len());
        Ok(self.point(step).expect("step is in range"))
    }

    /// Worker-count histogram `(n, samples)` at every step.
    pub fn class_counts(&self) -> Vec<Vec<(usize, usize)>> {
        let mut histogram = vec![0usize; self.k.div_ceil(2)];
        histogram[0] = self.samples;
        let mut counts = vec![1usize; self.samples];
        let mut out = Vec::with_capacity(self.steps.len());
        for s in &self.steps {
            if let Some(j) = s.incremented {
                histogram[counts[j] / 2] -= 1;
                counts[j] += 2;
                histogram[counts[j] / 2] += 1;
            }
            out.push(histogram.iter().enumerate().map(|(i, &c)| (2 * i + 1, c)).collect());
        }
        out
    }

    /// First step at which every worker-count class `1, 3, ..., k` has at
    /// least `min_per_class` samples.
    pub fn first_step_with_min_per_class(&self, min_per_class: usize) -> Option<usize> {
        self.class_counts().iter().position(|classes| classes.iter().all(|&(_, c)| c >= min_per_class)).map(|i| i + 1)
    }

    fn money(&self, units: u64) -> f64 {
        self.unit_cost * units as f64
    }

    pub fn write_csv<W: Write>(&self, writer: W, with_allocations: bool) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = vec!["m".to_string(), "budget".into(), "cost".into(), "ccr".into()];
        if with_allocations {
            header.extend((1..=self.samples).map(|j| format!("n_{j}")));
        }
        wtr.write_record(&header)?;
        let mut failure = None;
        self.walk(|p, counts| {
            if failure.is_some() {
                return;
            }
            let mut record = vec![p.step.to_string(), p.budget.to_string(), p.cost.to_string(), p.ccr.to_string()];
            if with_allocations {
                record.extend(counts.iter().map(usize::to_string));
            }
            if let Err(e) = wtr.write_record(&record) {
                failure = Some(e);
            }
        });
        if let Some(e) = failure {
            return Err(e.into());
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_json(&self, with_allocations: bool) -> serde_json::Value {
        let mut points = Vec::with_capacity(self.steps.len());
        self.walk(|p, counts| {
            let mut point = serde_json::json!({
                "m": p.step,
                "budget": p.budget,
                "cost": p.cost,
                "ccr": p.ccr,
            });
            if with_allocations {
                point["allocation"] = serde_json::json!(counts);
            }
            points.push(point);
        });
        serde_json::json!({
            "samples": self.samples,
            "k": self.k,
            "unit_cost": self.unit_cost,
            "plateau_step": self.plateau_step,
            "points": points,
        })
    }
}

struct FrontierBuilder {
    steps: Vec<Step>,
    plateau_step: Option<usize>,
    sum_q: f64,
    units: u64,
    samples: usize,
}

impl FrontierBuilder {
    fn new(problem: &AllocationProblem) -> Self {
        let samples = problem.len();
        let sum_q: f64 = problem.curves.iter().map(|c| c.value(1)).sum();
        let first = Step {
            budget_units: samples as u64,
            cost_units: samples as u64,
            ccr: sum_q / samples as f64,
            incremented: None,
        };
        FrontierBuilder { steps: vec![first], plateau_step: None, sum_q, units: samples as u64, samples }
    }

    fn push(&mut self, increment: Option<(usize, f64)>) {
        let m = self.steps.len();
        match increment {
            Some((_, gain)) => {
                self.sum_q += gain;
                self.units += 2;
            }
            None if self.plateau_step.is_none() => self.plateau_step = Some(m),
            None => {}
        }
        self.steps.push(Step {
            budget_units: self.samples as u64 + 2 * m as u64,
            cost_units: self.units,
            ccr: self.sum_q / self.samples as f64,
            incremented: increment.map(|(j, _)| j),
        });
    }

    fn finish(self, problem: &AllocationProblem) -> BudgetFrontier {
        BudgetFrontier {
            samples: self.samples,
            k: problem.k,
            unit_cost: problem.unit_cost,
            steps: self.steps,
            plateau_step: self.plateau_step,
        }
    }
}

/// The step-by-step greedy allocator. Each step scans all samples for the
/// largest gain (lowest index wins ties); samples already at `k` are skipped,
/// and only strictly positive gains are applied.
pub fn buoca_greedy(problem: &AllocationProblem) -> BudgetFrontier {
    let k = problem.k;
    let mut counts = vec![1usize; problem.len()];
    let mut builder = FrontierBuilder::new(problem);

    for _ in 1..problem.frontier_len() {
        let mut best: Option<(usize, f64)> = None;
        for (j, curve) in problem.curves.iter().enumerate() {
            if counts[j] + 2 > k {
                continue;
            }
            let gain = curve.gain_at_index(counts[j] / 2);
            if best.is_none_or(|(_, g)| gain > g) {
                best = Some((j, gain));
            }
        }
        let increment = best.filter(|&(_, gain)| gain > 0.0);
        if let Some((j, _)) = increment {
            counts[j] += 2;
        }
        builder.push(increment);
    }
    builder.finish(problem)
}

/// Sort-based allocator: apply all positive first-order differences in
/// decreasing order. Only valid when every curve is non-increasing or
/// non-decreasing and concave; otherwise returns a precondition error.
pub fn buoca_sorted(problem: &AllocationProblem) -> Result<BudgetFrontier> {
    if let Some(j) = problem.classify(DEFAULT_TOLERANCE).iter().position(|c| !c.is_greedy_safe()) {
        return Err(Error::Precondition(format!(
            "sample {j} has a curve that is neither non-increasing nor non-decreasing and concave"
        )));
    }

    let mut increments: Vec<(f64, usize, usize)> = problem
        .curves
        .iter()
        .enumerate()
        .flat_map(|(j, curve)| {
            curve
                .first_order_differences()
                .into_iter()
                .enumerate()
                .filter(|&(_, (_, d))| d > 0.0)
                .map(move |(i, (_, d))| (d, j, i))
        })
        .collect();
    increments.sort_by(|a, b| match b.0.total_cmp(&a.0) {
        Ordering::Equal => (a.1, a.2).cmp(&(b.1, b.2)),
        other => other,
    });

    let mut counts = vec![1usize; problem.len()];
    let mut builder = FrontierBuilder::new(problem);
    let mut queue = increments.into_iter();
    for _ in 1..problem.frontier_len() {
        let increment = queue.next().map(|(_, j, _)| {
            let gain = problem.curves[j].gain_at_index(counts[j] / 2);
            counts[j] += 2;
            (j, gain)
        });
        builder.push(increment);
    }
    Ok(builder.finish(problem))
}

/// Frontier point with the largest budget not exceeding `beta`.
pub fn allocation_at_budget(frontier: &BudgetFrontier, beta: f64) -> Result<FrontierPoint> {
    frontier.at_budget(beta)
}
