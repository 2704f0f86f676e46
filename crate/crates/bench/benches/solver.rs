use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use cdcert_bench::bench_instance;
use cdcert_core::penalty::PenaltySpec;
use cdcert_core::solver::{cd_sweep, solve, CdState, SolverOptions};

fn single_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("cd_sweep");
    for &(n, p) in &[(100usize, 400usize), (200, 1000)] {
        let inst = bench_instance(n, p, 13);
        let lambda = 0.2 * inst.problem.lambda_max();
        let spec = PenaltySpec::mcp(lambda, 3.0).unwrap();
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{n}x{p}")),
            &inst,
            |b, inst| {
                b.iter_batched(
                    || CdState::new(&inst.problem, vec![0.0; p]).unwrap(),
                    |mut state| {
                        cd_sweep(&inst.problem, &spec, &mut state).unwrap();
                        black_box(state)
                    },
                    criterion::BatchSize::SmallInput,
                )
            },
        );
    }
    group.finish();
}

fn full_solve(c: &mut Criterion) {
    let inst = bench_instance(100, 400, 13);
    let lambda = 0.2 * inst.problem.lambda_max();
    let spec = PenaltySpec::mcp(lambda, 3.0).unwrap();
    let mut group = c.benchmark_group("solve_100x400");
    group.sample_size(20);
    group.bench_function("plain", |b| {
        b.iter(|| solve(&inst.problem, &spec, &SolverOptions::default()).unwrap())
    });
    group.bench_function("with_certificates", |b| {
        let opts = SolverOptions {
            collect_certificates: true,
            ..Default::default()
        };
        b.iter(|| solve(&inst.problem, &spec, &opts).unwrap())
    });
    group.finish();
}

criterion_group!(benches, single_sweep, full_solve);
criterion_main!(benches);
