//! Benchmarks the hot training paths. Bench ids carry the build flavor, so
//! running `cargo bench` and `cargo bench --no-default-features` side by
//! side compares the rayon path against the sequential fallback on the same
//! criterion baselines.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use compset::corpus::Page;
use compset::em::{e_step, train, TrainConfig};
use compset::features::{FeatureKinds, WordList};
use compset::model::{corpus_log_likelihood, CandidateTable, ModelParams, OrthoMode};
use compset::synth::{generate, SynthConfig};

const FLAVOR: &str = if cfg!(feature = "parallel") {
    "parallel"
} else {
    "sequential"
};

fn corpus(pages_per_compositor: usize) -> (Vec<Page>, WordList) {
    let config = SynthConfig {
        pages_per_compositor,
        seed: 42,
        ..SynthConfig::default()
    };
    let (pages, _, _) = generate(&config).expect("synth corpus");
    let wordlist = WordList::from_entries(
        config
            .vocabulary
            .iter()
            .map(|(m, ds)| (m.clone(), ds.iter().cloned())),
    );
    (pages, wordlist)
}

fn bench_scoring(c: &mut Criterion) {
    let (pages, wordlist) = corpus(60);
    let table = CandidateTable::build(&wordlist, FeatureKinds::ALL);
    let params = ModelParams::uniform(3, 40, table.num_features(), OrthoMode::Loglinear);

    let mut group = c.benchmark_group("scoring");
    group.bench_function(BenchmarkId::new("corpus_log_likelihood", FLAVOR), |b| {
        b.iter(|| corpus_log_likelihood(black_box(&params), &table, &pages).unwrap())
    });
    group.bench_function(BenchmarkId::new("e_step", FLAVOR), |b| {
        b.iter(|| e_step(black_box(&params), &table, &pages).unwrap())
    });
    group.finish();
}

fn bench_train(c: &mut Criterion) {
    let (pages, wordlist) = corpus(20);
    let config = TrainConfig {
        num_compositors: 3,
        em_iterations: 15,
        restarts: 4,
        mstep_inner_iterations: 10,
        seed: 7,
        ..TrainConfig::default()
    };

    let mut group = c.benchmark_group("train");
    group.sample_size(10);
    group.bench_function(BenchmarkId::new("restarts4_iters15", FLAVOR), |b| {
        b.iter(|| train(black_box(&pages), &wordlist, &config).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_scoring, bench_train);
criterion_main!(benches);
