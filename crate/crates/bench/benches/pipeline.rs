use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ifegr_bench::{discretize, problem, solution, SIZES};
use ifegr_core::benchmark::{run_level, ProblemName, RunOptions};
use ifegr_core::recovery::{enrich, RecoveryOperator};
use ifegr_core::system::{apply_dirichlet, assemble, solve, EdgeTermSign, Method, DEFAULT_REL_TOL};
use ifegr_core::Discretization;

fn geometry(c: &mut Criterion) {
    let p = problem(ProblemName::Ex1);
    let mut group = c.benchmark_group("discretize");
    for n in SIZES {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| b.iter(|| discretize(&p, black_box(n))));
    }
    group.finish();
}

fn assembly(c: &mut Criterion) {
    let p = problem(ProblemName::Ex1);
    let mut group = c.benchmark_group("assemble");
    for n in SIZES {
        let disc = discretize(&p, n);
        for method in [Method::Scifem, Method::Pgifem] {
            group.bench_with_input(BenchmarkId::new(method.to_string(), n), &disc, |b, disc: &Discretization| {
                b.iter(|| assemble(disc, &p.data, method, EdgeTermSign::Minus).unwrap())
            });
        }
    }
    group.finish();
}

fn linear_solve(c: &mut Criterion) {
    let p = problem(ProblemName::Ex1);
    let mut group = c.benchmark_group("solve");
    group.sample_size(10);
    for n in SIZES {
        let disc = discretize(&p, n);
        for method in [Method::Scifem, Method::Pgifem] {
            let system = assemble(&disc, &p.data, method, EdgeTermSign::Minus).unwrap();
            let system = apply_dirichlet(system, &disc.mesh, |z| p.data.boundary_value(z));
            group.bench_with_input(BenchmarkId::new(method.to_string(), n), &system, |b, s| b.iter(|| solve(s, DEFAULT_REL_TOL).unwrap()));
        }
    }
    group.finish();
}

fn recovery(c: &mut Criterion) {
    let p = problem(ProblemName::Ex1);
    let mut group = c.benchmark_group("recovery");
    for n in SIZES {
        let disc = discretize(&p, n);
        let u = solution(&p, &disc, Method::Scifem);
        group.bench_with_input(BenchmarkId::new("operator", n), &disc, |b, disc| b.iter(|| RecoveryOperator::new(&disc.fitted).unwrap()));
        let op = RecoveryOperator::new(&disc.fitted).unwrap();
        group.bench_with_input(BenchmarkId::new("apply", n), &u, |b, u| b.iter(|| op.apply(&enrich(&disc, u))));
    }
    group.finish();
}

fn full_level(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_level");
    group.sample_size(10);
    for name in ProblemName::ALL {
        let p = problem(name);
        let opts = RunOptions::new(Method::Scifem);
        group.bench_with_input(BenchmarkId::new(name.to_string(), 64), &64, |b, &n| b.iter(|| run_level(&p, n, &opts).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, geometry, assembly, linear_solve, recovery, full_level);
criterion_main!(benches);
