use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use di_audit_core::curve::di_curve_with;
use di_audit_core::synthetic::{
    analytic_curve_with, example_spec, published_range, sample_with, sweep_with, SweepMetric,
    SweepMode, SweepOptions,
};
use di_audit_core::Execution;

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn empirical_curve(c: &mut Criterion) {
    let spec = example_spec(3, 2.0).unwrap();
    let mut group = c.benchmark_group("di_curve");
    for n in [10_000usize, 200_000] {
        let partition = sample_with(&spec, n, 1, Execution::default()).unwrap();
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &partition, |b, p| {
                b.iter(|| di_curve_with(p, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn analytic_curve(c: &mut Criterion) {
    let spec = example_spec(2, 1.0).unwrap();
    let mut group = c.benchmark_group("analytic_curve");
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| analytic_curve_with(&spec, exec).unwrap()));
    }
    group.finish();
}

fn sampling(c: &mut Criterion) {
    let spec = example_spec(1, 5.0).unwrap();
    let mut group = c.benchmark_group("sample_200k");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| sample_with(&spec, 200_000, 9, exec).unwrap()));
    }
    group.finish();
}

fn sampled_sweep(c: &mut Criterion) {
    let params = published_range(1).unwrap();
    let mut group = c.benchmark_group("sampled_sweep_example1");
    group.sample_size(10);
    for (name, exec) in MODES {
        let opts = SweepOptions {
            exec,
            ..SweepOptions::default()
        };
        let mode = SweepMode::Sampled {
            n_per_group: 20_000,
            seed: 3,
        };
        group.bench_function(name, |b| {
            b.iter(|| sweep_with(1, &params, &SweepMetric::ALL, mode, &opts).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, empirical_curve, analytic_curve, sampling, sampled_sweep);
criterion_main!(benches);
