//! Replays an allocation against the pilot's recorded labels: for a sample
//! given `n` workers, the fused label is the plurality over a uniformly chosen
//! `n`-subset of its `k` pilot workers.
//!
//! The exact path enumerates label-count compositions (a product of binomials
//! over label types) rather than individual subsets.

use std::collections::BTreeMap;
use std::io::Write;
use std::str::FromStr;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::allocator::Allocation;
use crate::error::{Error, Result};
use crate::pilot::PilotDataset;
use crate::seeding::rng_for;

/// How a multi-way plurality tie is scored.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TieRule {
    /// Each tied label wins with probability `1/|tied|`.
    #[default]
    Fractional,
    /// A tie is an outcome of its own and never counts as correct.
    Fail,
}

impl FromStr for TieRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fractional" => Ok(TieRule::Fractional),
            "fail" => Ok(TieRule::Fail),
            other => Err(Error::validation(format!("unknown tie rule `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Vote {
    Winner(String),
    /// Fractional credit over tied labels.
    Split(Vec<(String, f64)>),
    Tie(Vec<String>),
}

impl Vote {
    /// Probability the fused label equals `expert`.
    pub fn credit(&self, expert: &str) -> f64 {
        match self {
            Vote::Winner(label) => f64::from(u8::from(label == expert)),
            Vote::Split(weights) => weights.iter().find(|(l, _)| l == expert).map_or(0.0, |(_, w)| *w),
            Vote::Tie(_) => 0.0,
        }
    }
}

pub fn plurality_label<S: AsRef<str>>(labels: &[S], tie_rule: TieRule) -> Result<Vote> {
    if labels.is_empty() {
        return Err(Error::validation("plurality of an empty label multiset"));
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for label in labels {
        *counts.entry(label.as_ref()).or_default() += 1;
    }
    let top = *counts.values().max().expect("non-empty");
    let tied: Vec<String> = counts.into_iter().filter(|&(_, c)| c == top).map(|(l, _)| l.to_string()).collect();
    Ok(match (tied.len(), tie_rule) {
        (1, _) => Vote::Winner(tied.into_iter().next().expect("one label")),
        (size, TieRule::Fractional) => {
            let w = 1.0 / size as f64;
            Vote::Split(tied.into_iter().map(|l| (l, w)).collect())
        }
        (_, TieRule::Fail) => Vote::Tie(tied),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SimulationMethod {
    Exact,
    MonteCarlo { seed: u64, trials: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub sample_ids: Vec<String>,
    pub allocation: Vec<usize>,
    pub per_sample_accuracy: Vec<f64>,
    pub mean_accuracy: f64,
    pub total_units: u64,
    pub total_cost: f64,
    pub method: SimulationMethod,
    pub tie_rule: TieRule,
}

impl SimulationReport {
    fn assemble(
        data: &PilotDataset,
        alloc: &Allocation,
        per_sample_accuracy: Vec<f64>,
        method: SimulationMethod,
        tie_rule: TieRule,
    ) -> Self {
        let mean_accuracy = per_sample_accuracy.iter().sum::<f64>() / per_sample_accuracy.len() as f64;
        SimulationReport {
            sample_ids: data.sample_ids().to_vec(),
            allocation: alloc.as_slice().to_vec(),
            per_sample_accuracy,
            mean_accuracy,
            total_units: alloc.units(),
            total_cost: data.unit_cost() * alloc.units() as f64,
            method,
            tie_rule,
        }
    }

    /// Mean accuracy over a subset of samples.
    pub fn mean_over(&self, rows: &[usize]) -> f64 {
        if rows.is_empty() {
            return 0.0;
        }
        rows.iter().map(|&j| self.per_sample_accuracy[j]).sum::<f64>() / rows.len() as f64
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["sample_id", "n", "accuracy"])?;
        for ((id, n), acc) in self.sample_ids.iter().zip(&self.allocation).zip(&self.per_sample_accuracy) {
            wtr.write_record([id.as_str(), &n.to_string(), &acc.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// A sample's labels as per-type counts, with the expert's type (if any worker used it).
struct Tally {
    counts: Vec<usize>,
    codes: Vec<usize>,
    expert: Option<usize>,
}

impl Tally {
    fn new(workers: &[String], expert: &str) -> Self {
        let mut types: Vec<&str> = workers.iter().map(String::as_str).collect();
        types.sort_unstable();
        types.dedup();
        let code = |label: &str| types.binary_search(&label).ok();
        let codes: Vec<usize> = workers.iter().map(|w| code(w).expect("label is a known type")).collect();
        let mut counts = vec![0; types.len()];
        for &c in &codes {
            counts[c] += 1;
        }
        Tally { counts, codes, expert: code(expert) }
    }

    fn credit(&self, drawn: &[usize], rule: TieRule) -> f64 {
        let Some(expert) = self.expert else { return 0.0 };
        let top = *drawn.iter().max().expect("at least one label type");
        if drawn[expert] != top {
            return 0.0;
        }
        let tied = drawn.iter().filter(|&&c| c == top).count();
        match (tied, rule) {
            (1, _) => 1.0,
            (_, TieRule::Fractional) => 1.0 / tied as f64,
            (_, TieRule::Fail) => 0.0,
        }
    }
}

fn exact_binomial(n: usize, r: usize) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    (0..r).fold(1u128, |c, i| c * (n - i) as u128 / (i + 1) as u128)
}

/// Probability that a uniformly chosen `n`-subset of the sample's workers
/// votes the expert label.
fn exact_sample_accuracy(tally: &Tally, n: usize, rule: TieRule) -> f64 {
    fn walk(
        tally: &Tally,
        i: usize,
        left: usize,
        weight: u128,
        drawn: &mut Vec<usize>,
        rule: TieRule,
        acc: &mut (u128, f64),
    ) {
        if i == tally.counts.len() {
            if left == 0 {
                let credit = tally.credit(drawn, rule);
                if credit == 1.0 {
                    acc.0 += weight;
                } else if credit > 0.0 {
                    acc.1 += weight as f64 * credit;
                }
            }
            return;
        }
        let available = tally.counts[i];
        for x in 0..=available.min(left) {
            drawn[i] = x;
            walk(tally, i + 1, left - x, weight * exact_binomial(available, x), drawn, rule, acc);
        }
        drawn[i] = 0;
    }

    let mut acc = (0u128, 0.0f64);
    let mut drawn = vec![0; tally.counts.len()];
    walk(tally, 0, n, 1, &mut drawn, rule, &mut acc);
    let total = exact_binomial(tally.codes.len(), n);
    (acc.0 as f64 + acc.1) / total as f64
}

fn check_allocation(data: &PilotDataset, alloc: &Allocation) -> Result<()> {
    if alloc.len() != data.len() {
        return Err(Error::validation(format!(
            "allocation has {} entries, pilot has {} samples",
            alloc.len(),
            data.len()
        )));
    }
    Allocation::new(alloc.as_slice().to_vec(), data.k()).map(|_| ())
}

pub fn exact_subset_accuracy(data: &PilotDataset, alloc: &Allocation, tie_rule: TieRule) -> Result<SimulationReport> {
    check_allocation(data, alloc)?;
    let accuracy: Vec<f64> = (0..data.len())
        .into_par_iter()
        .map(|j| {
            let tally = Tally::new(&data.worker_labels()[j], &data.expert_labels()[j]);
            exact_sample_accuracy(&tally, alloc[j], tie_rule)
        })
        .collect();
    Ok(SimulationReport::assemble(data, alloc, accuracy, SimulationMethod::Exact, tie_rule))
}

/// Sampling estimate of [`exact_subset_accuracy`]. Each sample draws from its
/// own stream derived from `(seed, sample index)`.
pub fn monte_carlo_accuracy(
    data: &PilotDataset,
    alloc: &Allocation,
    seed: u64,
    trials: u64,
    tie_rule: TieRule,
) -> Result<SimulationReport> {
    check_allocation(data, alloc)?;
    if trials == 0 {
        return Err(Error::validation("Monte Carlo needs at least one trial"));
    }
    let k = data.k();
    let accuracy: Vec<f64> = (0..data.len())
        .into_par_iter()
        .map(|j| {
            let tally = Tally::new(&data.worker_labels()[j], &data.expert_labels()[j]);
            let mut rng = rng_for(seed, j as u64);
            let mut drawn = vec![0; tally.counts.len()];
            let mut total = 0.0;
            for _ in 0..trials {
                drawn.iter_mut().for_each(|d| *d = 0);
                for w in index::sample(&mut rng, k, alloc[j]) {
                    drawn[tally.codes[w]] += 1;
                }
                total += tally.credit(&drawn, tie_rule);
            }
            total / trials as f64
        })
        .collect();
    Ok(SimulationReport::assemble(data, alloc, accuracy, SimulationMethod::MonteCarlo { seed, trials }, tie_rule))
}

/// The conventional scheme: the same `n_fixed` workers for every sample.
pub fn fixed_allocation_baseline(data: &PilotDataset, n_fixed: usize, tie_rule: TieRule) -> Result<SimulationReport> {
    let alloc = Allocation::new(vec![n_fixed; data.len()], data.k())?;
    exact_subset_accuracy(data, &alloc, tie_rule)
}
