use std::hint::black_box;

use buoca_bench::{random_problem, synthetic};
use buoca_core::{buoca_greedy, buoca_sorted, exact_subset_accuracy, Allocation, TieRule};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn frontier(c: &mut Criterion) {
    let mut group = c.benchmark_group("frontier");
    for samples in [200, 1000, 4000] {
        let problem = random_problem(samples, 7, 1);
        group.bench_with_input(BenchmarkId::new("greedy", samples), &problem, |b, p| {
            b.iter(|| buoca_greedy(black_box(p)))
        });
        group.bench_with_input(BenchmarkId::new("sorted", samples), &problem, |b, p| {
            b.iter(|| buoca_sorted(black_box(p)).unwrap())
        });
    }
    group.finish();
}

fn simulation(c: &mut Criterion) {
    let mut group = c.benchmark_group("exact_simulation");
    for k in [7, 15] {
        let data = synthetic(2000, k, 3).pilot;
        let alloc = Allocation::new((0..2000).map(|j| [1, 3, 5, 7][j % 4]).collect(), k).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(k), &(data, alloc), |b, (d, a)| {
            b.iter(|| exact_subset_accuracy(d, a, TieRule::Fractional).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, frontier, simulation);
criterion_main!(benches);
