use std::hint::black_box;

use ampc::sim::{self, Execution, Scenario};
use criterion::{criterion_group, criterion_main, Criterion};

fn sweep(c: &mut Criterion) {
    let scenario = Scenario::benchmark();
    let synth = scenario.synthesize().expect("benchmark synthesis");
    let mut group = c.benchmark_group("monte_carlo_5x5");
    group.sample_size(10);
    group.bench_function("sequential", |b| {
        b.iter(|| sim::monte_carlo(black_box(&scenario), &synth, 5, 5, Execution::Sequential).unwrap())
    });
    group.bench_function("parallel", |b| {
        b.iter(|| sim::monte_carlo(black_box(&scenario), &synth, 5, 5, Execution::Parallel).unwrap())
    });
    group.finish();
}

criterion_group!(benches, sweep);
criterion_main!(benches);
