use buoca_bench::synthetic;
use buoca_core::learner::{train, AllocationLabelSet, ForestSettings};
use buoca_core::{buoca_sorted, estimate_success_probabilities, AllocationProblem};
use criterion::{criterion_group, criterion_main, Criterion};

fn forest(c: &mut Criterion) {
    let data = synthetic(2000, 7, 5);
    let problem = AllocationProblem::from_estimates(&estimate_success_probabilities(&data.pilot), None, 1.0).unwrap();
    let reference = buoca_sorted(&problem).unwrap().at_budget(4200.0).unwrap();
    let labels = AllocationLabelSet::from_point(&reference);

    let mut group = c.benchmark_group("forest");
    group.sample_size(10);
    group.bench_function("train_100_trees", |b| {
        b.iter(|| train(&data.features, &labels, &ForestSettings::new(1)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, forest);
criterion_main!(benches);
