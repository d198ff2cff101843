use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use comm_analysis::ced::parse_model_with;
use comm_analysis::derive::derive_class_model_with;
use comm_analysis::exec::Execution;
use comm_analysis::lint::{run_lints_with, LintConfig};
use comm_analysis::synthetic::synthetic_model;

const STRATEGIES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn pipeline(c: &mut Criterion) {
    let files = synthetic_model(1000, 20);
    let repo = parse_model_with(&files, Execution::Sequential).unwrap();
    let cfg = LintConfig::default();

    let mut group = c.benchmark_group("parse");
    for (name, exec) in STRATEGIES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| parse_model_with(black_box(&files), exec).unwrap())
        });
    }
    group.finish();

    let mut group = c.benchmark_group("lint");
    for (name, exec) in STRATEGIES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| run_lints_with(black_box(&repo), &cfg, exec))
        });
    }
    group.finish();

    let mut group = c.benchmark_group("derive");
    for (name, exec) in STRATEGIES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| derive_class_model_with(black_box(&repo), exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, pipeline);
criterion_main!(benches);
