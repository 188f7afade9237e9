use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use warpcone_core::action::gen_margulis_torus;
use warpcone_core::expansion::build_action_kernel;
use warpcone_core::families::random_reversible_kernel;
use warpcone_core::markov::{cheeger_exact, lambda2};
use warpcone_core::operator::{averaging_projection, rho_quasi_locality_profile};
use warpcone_core::warped::{warp, FiniteMetric};

fn bench_cheeger(c: &mut Criterion) {
    let mut group = c.benchmark_group("cheeger_exact");
    group.sample_size(10);
    for n in [8usize, 12, 16, 20] {
        let k = random_reversible_kernel(&mut ChaCha8Rng::seed_from_u64(n as u64), n).unwrap();
        let m = k.require_reversing_measure().unwrap().to_vec();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| black_box(cheeger_exact(black_box(&k), &m).unwrap()))
        });
    }
    group.finish();
}

fn bench_lambda2(c: &mut Criterion) {
    let mut group = c.benchmark_group("lambda2");
    for side in [4usize, 8, 16] {
        let action = gen_margulis_torus(side).unwrap();
        let all: Vec<usize> = (0..action.len()).collect();
        let ak = build_action_kernel(&action, &all, &action.gens().all()).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(side * side), &side, |b, _| {
            b.iter(|| black_box(lambda2(ak.kernel(), ak.tilde_nu()).unwrap()))
        });
    }
    group.finish();
}

fn bench_warp(c: &mut Criterion) {
    let mut group = c.benchmark_group("warp");
    for side in [4usize, 8, 16] {
        let action = gen_margulis_torus(side).unwrap();
        let metric = FiniteMetric::torus_linf(action.space().clone(), side).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(side * side), &side, |b, _| {
            b.iter(|| black_box(warp(&metric, &action, black_box(side as f64)).unwrap()))
        });
    }
    group.finish();
}

fn bench_quasi_locality(c: &mut Criterion) {
    let mut group = c.benchmark_group("rho_quasi_locality_exact");
    group.sample_size(10);
    for side in [2usize, 3] {
        let action = gen_margulis_torus(side).unwrap();
        let all: Vec<usize> = (0..action.len()).collect();
        let p = averaging_projection(action.space(), &all).unwrap().operator();
        group.bench_with_input(BenchmarkId::from_parameter(side * side), &side, |b, _| {
            b.iter(|| black_box(rho_quasi_locality_profile(&p, &action, &[0, 1, 2]).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_cheeger, bench_lambda2, bench_warp, bench_quasi_locality);
criterion_main!(benches);
