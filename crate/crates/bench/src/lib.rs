//! Shared fixtures for the benchmarks.

use buoca_core::seeding::rng_for;
use buoca_core::synth::{generate, parse_mixture, SynthConfig, SynthDataset};
use buoca_core::AllocationProblem;
use rand::Rng;

/// `samples` binomial curves with `p` uniform in `(0.5, 1]`.
pub fn random_problem(samples: usize, k: usize, seed: u64) -> AllocationProblem {
    let mut rng = rng_for(seed, 0);
    let p: Vec<f64> = (0..samples).map(|_| 1.0 - 0.5 * rng.random::<f64>()).collect();
    AllocationProblem::from_probabilities(&p, k, 1.0).expect("valid problem")
}

/// Two-difficulty synthetic pilot with features.
pub fn synthetic(samples: usize, k: usize, seed: u64) -> SynthDataset {
    let mixture = parse_mixture("0.95:0.6,0.65:0.4").expect("valid mixture");
    generate(&SynthConfig::new(mixture, samples, k, seed)).expect("valid config")
}
