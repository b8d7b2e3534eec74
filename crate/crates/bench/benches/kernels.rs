use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use drscert::sdplite::{eig_sym, max_eig, optimize_rate};
use drscert::splitting::{drs_run, DrsParams};
use drscert::FunctionClass;
use drscert_bench::{lasso, symmetric4};
use nalgebra::DVector;

fn eigen(c: &mut Criterion) {
    let m = symmetric4(0.25);
    c.bench_function("eig_sym_4x4", |b| b.iter(|| eig_sym(black_box(&m)).unwrap()));
    c.bench_function("max_eig_4x4", |b| b.iter(|| max_eig(black_box(&m)).unwrap()));
}

fn rate(c: &mut Criterion) {
    let mut group = c.benchmark_group("optimize_rate");
    group.sample_size(10);
    for kappa in [10.0, 100.0] {
        let fc = FunctionClass::smooth(1.0, kappa).unwrap();
        group.bench_function(format!("kappa_{kappa}"), |b| b.iter(|| optimize_rate(black_box(0.3), &fc).unwrap()));
    }
    group.finish();
}

fn splitting(c: &mut Criterion) {
    let (f, g) = lasso(60, 40, 0.1);
    let x0 = DVector::zeros(40);
    let params = DrsParams::new(1.0, 1.5).with_max_iters(500).with_stop_tol(0.0);
    c.bench_function("drs_lasso_60x40_500_iters", |b| b.iter(|| drs_run(&f, &g, &params, black_box(&x0)).unwrap()));
}

criterion_group!(benches, eigen, rate, splitting);
criterion_main!(benches);
