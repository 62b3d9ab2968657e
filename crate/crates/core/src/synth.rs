//! Seeded synthetic pilot data with a known difficulty mixture.
//!
//! Each sample draws a true success probability from the mixture, an expert
//! label uniformly from the label set, and `k` independent worker labels:
//! correct with probability p, otherwise uniform over the wrong labels.
//! Features are a noisy copy of the empirical agreement rate, a hard/easy
//! indicator and pure-noise columns.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::pilot::PilotDataset;
use crate::seeding::{derive_seed, rng_for};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub p: f64,
    pub weight: f64,
}

/// Parse `p:weight,p:weight,...`.
pub fn parse_mixture(text: &str) -> Result<Vec<MixtureComponent>> {
    text.split(',')
        .map(|part| {
            let (p, w) = part
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("mixture component `{part}` is not `p:weight`")))?;
            let number = |s: &str| s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("`{s}` is not a number")));
            Ok(MixtureComponent { p: number(p)?, weight: number(w)? })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub mixture: Vec<MixtureComponent>,
    pub samples: usize,
    pub k: usize,
    pub seed: u64,
    pub unit_cost: f64,
    pub labels: Vec<String>,
    /// Standard deviation of the noise added to the agreement-rate column.
    pub signal_noise: f64,
    pub noise_columns: usize,
}

impl SynthConfig {
    pub fn new(mixture: Vec<MixtureComponent>, samples: usize, k: usize, seed: u64) -> Self {
        SynthConfig {
            mixture,
            samples,
            k,
            seed,
            unit_cost: 1.0,
            labels: ["negative", "neutral", "positive"].map(String::from).to_vec(),
            signal_noise: 0.05,
            noise_columns: 2,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.mixture.is_empty() {
            return Err(Error::validation("mixture needs at least one component"));
        }
        for c in &self.mixture {
            if !(0.0..=1.0).contains(&c.p) {
                return Err(Error::validation(format!("mixture probability {} is outside [0, 1]", c.p)));
            }
            if !(c.weight.is_finite() && c.weight >= 0.0) {
                return Err(Error::validation(format!("mixture weight {} is not a non-negative number", c.weight)));
            }
        }
        let total: f64 = self.mixture.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::validation(format!("mixture weights sum to {total}, not 1")));
        }
        if self.samples == 0 {
            return Err(Error::validation("need at least one sample"));
        }
        if self.labels.len() < 2 {
            return Err(Error::validation("need at least two labels"));
        }
        if !(self.signal_noise.is_finite() && self.signal_noise >= 0.0) {
            return Err(Error::validation("signal noise must be a non-negative number"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub pilot: PilotDataset,
    pub features: FeatureMatrix,
    /// The success probability each sample was generated with.
    pub true_p: Vec<f64>,
}

pub fn generate(config: &SynthConfig) -> Result<SynthDataset> {
    config.validate()?;
    let easiest = config.mixture.iter().map(|c| c.p).fold(f64::NEG_INFINITY, f64::max);
    let label_seed = derive_seed(config.seed, 0);
    let feature_seed = derive_seed(config.seed, 1);
    let signal = Normal::new(0.0, config.signal_noise).map_err(|e| Error::validation(e.to_string()))?;

    let mut ids = Vec::with_capacity(config.samples);
    let mut experts = Vec::with_capacity(config.samples);
    let mut workers = Vec::with_capacity(config.samples);
    let mut rows = Vec::with_capacity(config.samples);
    let mut true_p = Vec::with_capacity(config.samples);
    let label_count = config.labels.len();

    for j in 0..config.samples {
        let mut rng = rng_for(label_seed, j as u64);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut component = config.mixture[config.mixture.len() - 1];
        for c in &config.mixture {
            acc += c.weight;
            if u < acc {
                component = *c;
                break;
            }
        }
        let expert = rng.random_range(0..label_count);
        let mut correct = 0;
        let labels: Vec<String> = (0..config.k)
            .map(|_| {
                let label = if rng.random_bool(component.p) {
                    correct += 1;
                    expert
                } else {
                    let wrong = rng.random_range(0..label_count - 1);
                    if wrong >= expert {
                        wrong + 1
                    } else {
                        wrong
                    }
                };
                config.labels[label].clone()
            })
            .collect();

        let mut frng = rng_for(feature_seed, j as u64);
        let agreement = correct as f64 / config.k as f64;
        let mut row = vec![agreement + signal.sample(&mut frng), if component.p < easiest { 1.0 } else { 0.0 }];
        row.extend((0..config.noise_columns).map(|_| frng.random::<f64>()));

        ids.push(format!("s{j}"));
        experts.push(config.labels[expert].clone());
        workers.push(labels);
        rows.push(row);
        true_p.push(component.p);
    }

    let mut columns = vec!["difficulty_signal".to_string(), "hard_indicator".to_string()];
    columns.extend((1..=config.noise_columns).map(|i| format!("noise_{i}")));
    Ok(SynthDataset {
        features: FeatureMatrix::new(ids.clone(), columns, rows)?,
        pilot: PilotDataset::new(ids, experts, workers, config.k, config.unit_cost, Some(config.labels.clone()))?,
        true_p,
    })
}
