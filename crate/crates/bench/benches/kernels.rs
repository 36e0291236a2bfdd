use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};
use num_complex::Complex64;
use qht_core::diagnostics::{class_norm_on, SmoothnessClass};
use qht_core::numerics::{chirp_z, fourier_sum};
use qht_core::simulate::{simulate, StateSpec};
use qht_core::{
    log_likelihood, mcmc_wilson, noisy_density, wigner, Grid2D, McmcConfig, NoiseModel, WaveFunction, WilsonBasis,
    WilsonPriorConfig,
};

fn transforms(c: &mut Criterion) {
    let input: Vec<Complex64> = (0..1024).map(|j| Complex64::new((j as f64 * 0.01).sin(), 0.0)).collect();
    c.bench_function("chirp_z 1024x1024", |b| b.iter(|| chirp_z(black_box(&input), 1024, 1.0 / 3000.0)));
    c.bench_function("fourier_sum 1024x512", |b| {
        b.iter(|| fourier_sum(black_box(&input), -8.0, 1.0 / 64.0, -4.0, 1.0 / 64.0, 512, 1.0))
    });
}

fn states(c: &mut Criterion) {
    let grid = Grid2D::square(6.0, 129).unwrap();
    let cat = WaveFunction::cat(2.0);
    c.bench_function("wigner cat 129x129", |b| b.iter(|| wigner(black_box(&cat), &grid).unwrap()));

    let nm = NoiseModel::new(0.95).unwrap();
    c.bench_function("noisy_density cat", |b| b.iter(|| noisy_density(&cat, black_box(0.7), 0.3, &nm)));

    let cls = SmoothnessClass::vacuum(2.0, 0.75, 1.0).unwrap();
    let g = Grid2D::square(6.0, 201).unwrap();
    c.bench_function("class_norm_on fock2 201x201", |b| {
        b.iter(|| class_norm_on(black_box(&WaveFunction::Fock2), &cls, &g))
    });
}

fn inference(c: &mut Criterion) {
    let nm = NoiseModel::new(0.95).unwrap();
    let data = simulate(&StateSpec::Fock2, 500, &nm, 7).unwrap().samples;
    let cat = WaveFunction::cat(2.0);
    c.bench_function("log_likelihood n=500", |b| b.iter(|| log_likelihood(black_box(&cat), &data, &nm)));

    let basis = Arc::new(WilsonBasis::standard().unwrap());
    let prior = WilsonPriorConfig::default();
    let cfg = McmcConfig { n_iter: 50, burn_in: 10, ..McmcConfig::default() };
    let mut group = c.benchmark_group("mcmc");
    group.sample_size(10);
    group.bench_function("wilson 50 iterations n=500", |b| {
        b.iter(|| mcmc_wilson(&data, &nm, &basis, &prior, &cfg, 11).unwrap())
    });
    group.finish();
}

criterion_group!(benches, transforms, states, inference);
criterion_main!(benches);
