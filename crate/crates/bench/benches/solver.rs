use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use semistable::{principal_eigenvalue, ContinuationOptions, EigenOptions, NewtonOptions};
use semistable_bench::hyperbolic_exp_problem;

fn newton(c: &mut Criterion) {
    let mut group = c.benchmark_group("newton_solve_lambda_8");
    for cells in [256, 1024, 4096] {
        let p = hyperbolic_exp_problem(cells);
        let u0 = vec![0.0; cells];
        group.bench_with_input(BenchmarkId::from_parameter(cells), &cells, |b, _| {
            b.iter(|| {
                p.newton_solve(black_box(8.0), &u0, &NewtonOptions::default())
                    .unwrap()
            })
        });
    }
    group.finish();
}

fn eigenvalue(c: &mut Criterion) {
    let mut group = c.benchmark_group("principal_eigenvalue_lambda_8");
    for cells in [256, 1024, 4096] {
        let p = hyperbolic_exp_problem(cells);
        let u = p
            .newton_solve(8.0, &vec![0.0; cells], &NewtonOptions::default())
            .unwrap()
            .u;
        group.bench_with_input(BenchmarkId::from_parameter(cells), &cells, |b, _| {
            b.iter(|| {
                principal_eigenvalue(
                    p.operator(),
                    p.nonlinearity(),
                    8.0,
                    black_box(&u),
                    &EigenOptions::default(),
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

fn continuation(c: &mut Criterion) {
    let mut group = c.benchmark_group("continue_branch");
    group.sample_size(10);
    for cells in [256, 1024] {
        let p = hyperbolic_exp_problem(cells);
        group.bench_with_input(BenchmarkId::from_parameter(cells), &cells, |b, _| {
            b.iter(|| p.continue_branch(&ContinuationOptions::default()).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, newton, eigenvalue, continuation);
criterion_main!(benches);
