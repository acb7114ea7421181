use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use zerofid::gamma::build_gamma;
use zerofid::{
    apply_channel, hermitian_eig, kron, min_process_fidelity, random_cptp, zero_fidelity_choi,
    zero_fidelity_direct, ComplexMatrix, SolverConfig,
};

fn kernels(c: &mut Criterion) {
    let a = random_cptp(2, 4, 1).unwrap().choi().clone();
    let b = ComplexMatrix::identity(4);
    c.bench_function("kron 16x16 by 4x4", |bench| {
        bench.iter(|| kron(black_box(&a), black_box(&b)).unwrap())
    });

    let mut group = c.benchmark_group("hermitian_eig");
    for n in 1..=3 {
        let chi = random_cptp(n, 2, 3).unwrap().choi().clone();
        group.bench_with_input(BenchmarkId::from_parameter(chi.rows()), &chi, |bench, m| {
            bench.iter(|| hermitian_eig(black_box(m)).unwrap())
        });
    }
    group.finish();

    let mut group = c.benchmark_group("build_gamma");
    for n in 1..=3 {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |bench, &n| {
            bench.iter(|| build_gamma(n).unwrap())
        });
    }
    group.finish();
}

fn fidelities(c: &mut Criterion) {
    let ch = random_cptp(3, 8, 5).unwrap();
    let g = build_gamma(3).unwrap();
    let rho = ComplexMatrix::identity(8).scale(0.125);
    c.bench_function("apply_channel n=3", |bench| {
        bench.iter(|| apply_channel(black_box(&ch), black_box(&rho)).unwrap())
    });
    c.bench_function("F0 direct n=3", |bench| {
        bench.iter(|| zero_fidelity_direct(black_box(&ch)).unwrap())
    });
    c.bench_function("F0 via Choi n=3", |bench| {
        bench.iter(|| zero_fidelity_choi(black_box(&ch), black_box(&g)).unwrap())
    });
}

fn sdp(c: &mut Criterion) {
    let cfg = SolverConfig::default();
    let mut group = c.benchmark_group("min_process_fidelity");
    group.sample_size(10);
    for n in 1..=2 {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |bench, &n| {
            bench.iter(|| min_process_fidelity(n, black_box(0.95), &cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, kernels, fidelities, sdp);
criterion_main!(benches);
