use buoca_core::pilot::{read_pilot, write_pilot};
use buoca_core::simulator::monte_carlo_accuracy;
use buoca_core::success::binomial_success_curve;
use buoca_core::synth::{generate, MixtureComponent, SynthConfig};
use buoca_core::{
    buoca_greedy, ccr, exact_subset_accuracy, Allocation, AllocationProblem, PilotDataset, PilotFormat, TieRule,
};
use proptest::prelude::*;

fn problem_strategy() -> impl Strategy<Value = AllocationProblem> {
    (
        prop::collection::vec(0.0f64..=1.0, 1..8),
        prop::sample::select(vec![1usize, 3, 5, 7]),
        prop::sample::select(vec![0.5, 1.0, 2.0]),
    )
        .prop_map(|(p, k, c)| AllocationProblem::from_probabilities(&p, k, c).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn frontier_invariants(problem in problem_strategy()) {
        let frontier = buoca_greedy(&problem);
        let j = problem.len();
        let c = problem.unit_cost();
        prop_assert_eq!(frontier.len(), 1 + j * (problem.k() - 1) / 2);

        let mut points = Vec::new();
        frontier.walk(|point, counts| points.push((point, counts.to_vec())));
        for (i, (point, counts)) in points.iter().enumerate() {
            prop_assert!(point.budget >= point.cost - 1e-9);
            let gap = (point.budget - point.cost) / c;
            prop_assert!((gap - gap.round()).abs() < 1e-9 && gap.round() as i64 % 2 == 0);
            let alloc = Allocation::new(counts.clone(), problem.k()).unwrap();
            prop_assert!((ccr(&alloc, &problem).unwrap() - point.ccr).abs() <= 1e-9);
            if frontier.plateau_step().is_none_or(|m0| point.step < m0) {
                prop_assert!((point.budget - point.cost).abs() < 1e-9);
            }
            if i == 0 {
                continue;
            }
            let (prev, prev_counts) = &points[i - 1];
            prop_assert!(point.ccr >= prev.ccr);
            prop_assert!(point.cost >= prev.cost);
            let changed: Vec<usize> = (0..j).filter(|&s| counts[s] != prev_counts[s]).collect();
            prop_assert!(changed.len() <= 1);
            if let Some(&s) = changed.first() {
                prop_assert_eq!(counts[s], prev_counts[s] + 2);
            }
            if frontier.plateau_step().is_some_and(|m0| point.step > m0) {
                prop_assert!(changed.is_empty());
            }
        }
    }

    #[test]
    fn pilot_round_trip(
        rows in prop::collection::vec((0usize..3, prop::collection::vec(0usize..3, 5)), 1..12),
        json in any::<bool>(),
    ) {
        let labels = ["neg", "neu", "pos"];
        let data = PilotDataset::new(
            (0..rows.len()).map(|i| format!("id-{i}")).collect(),
            rows.iter().map(|(e, _)| labels[*e].to_string()).collect(),
            rows.iter().map(|(_, w)| w.iter().map(|&l| labels[l].to_string()).collect()).collect(),
            5,
            1.0,
            None,
        )
        .unwrap();
        let format = if json { PilotFormat::Json } else { PilotFormat::Csv };
        let mut buf = Vec::new();
        write_pilot(&data, &mut buf, format).unwrap();
        prop_assert_eq!(read_pilot(buf.as_slice(), format).unwrap(), data);
    }
}

#[test]
fn large_iid_pools_approach_the_binomial_model() {
    let mut config = SynthConfig::new(vec![MixtureComponent { p: 0.7, weight: 1.0 }], 400, 41, 13);
    config.labels = vec!["a".into(), "b".into()];
    let data = generate(&config).unwrap().pilot;
    for n in [1, 3, 5, 9] {
        let sim = exact_subset_accuracy(&data, &Allocation::uniform(data.len(), n), TieRule::Fractional).unwrap();
        let model = binomial_success_curve(0.7, n).unwrap().value(n);
        assert!((sim.mean_accuracy - model).abs() <= 0.02, "n={n}: {} vs {model}", sim.mean_accuracy);
    }
}

#[test]
fn monte_carlo_within_three_standard_errors() {
    let mut config = SynthConfig::new(vec![MixtureComponent { p: 0.6, weight: 1.0 }], 30, 7, 21);
    config.signal_noise = 0.0;
    let data = generate(&config).unwrap().pilot;
    let alloc = Allocation::new((0..30).map(|j| [1, 3, 5, 7][j % 4]).collect(), 7).unwrap();
    let trials = 20_000;
    let exact = exact_subset_accuracy(&data, &alloc, TieRule::Fractional).unwrap();
    let mc = monte_carlo_accuracy(&data, &alloc, 8, trials, TieRule::Fractional).unwrap();
    for (e, m) in exact.per_sample_accuracy.iter().zip(&mc.per_sample_accuracy) {
        let bound = 3.0 * (e * (1.0 - e) / trials as f64).sqrt() + 1e-9;
        assert!((e - m).abs() <= bound, "{e} vs {m}");
    }
}

#[test]
fn each_increment_adds_two_units() {
    let data = generate(&SynthConfig::new(vec![MixtureComponent { p: 0.8, weight: 1.0 }], 5, 7, 2)).unwrap().pilot;
    let data = data.with_unit_cost(2.5).unwrap();
    let mut counts = vec![1; 5];
    let mut last =
        exact_subset_accuracy(&data, &Allocation::new(counts.clone(), 7).unwrap(), TieRule::Fail).unwrap().total_cost;
    for j in [0, 3, 0, 4] {
        counts[j] += 2;
        let cost = exact_subset_accuracy(&data, &Allocation::new(counts.clone(), 7).unwrap(), TieRule::Fail)
            .unwrap()
            .total_cost;
        assert_eq!(cost - last, 5.0);
        last = cost;
    }
}

#[test]
fn problem_from_synthetic_pilot_is_greedy_safe() {
    let data = generate(&SynthConfig::new(vec![MixtureComponent { p: 0.9, weight: 1.0 }], 50, 5, 1)).unwrap().pilot;
    let est = buoca_core::estimate_success_probabilities(&data);
    let problem = AllocationProblem::from_estimates(&est, None, 1.0).unwrap();
    assert!(problem.greedy_is_optimal(1e-9));
}
