use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use pcscale_bench::{counts, default_study};
use pcscale_core::analysis::bootstrap_srocc;
use pcscale_core::design::generate_pair_graph;
use pcscale_core::fixtures::{load_fixtures, AVERAGE};
use pcscale_core::scaling::{preference_matrix, solve_scale_ls, solve_scale_mle, zscore_matrix, MleOptions};

fn scaling(c: &mut Criterion) {
    let (config, study) = default_study();
    let counts = counts(&study);
    let z = zscore_matrix(&preference_matrix(&counts, config.epsilon_policy), config.sigma_ab);
    let init = solve_scale_ls(&z).unwrap();

    c.bench_function("ls_solve_141", |b| b.iter(|| solve_scale_ls(black_box(&z)).unwrap()));
    c.bench_function("mle_solve_141", |b| {
        b.iter(|| solve_scale_mle(black_box(&counts), config.sigma_ab, config.epsilon_policy, &init, MleOptions::default()).unwrap())
    });
}

fn design(c: &mut Criterion) {
    let mut seed = 0u64;
    c.bench_function("pair_graph_141x6", |b| {
        b.iter(|| {
            seed += 1;
            generate_pair_graph(141, 6, seed).unwrap()
        })
    });
}

fn bootstrap(c: &mut Criterion) {
    let pairs = load_fixtures().sequence(AVERAGE).unwrap().rank_pairs();
    c.bench_function("bootstrap_srocc_1000", |b| b.iter(|| bootstrap_srocc(black_box(&pairs), 1000, 0.95, 7).unwrap()));
}

criterion_group!(benches, scaling, design, bootstrap);
criterion_main!(benches);
