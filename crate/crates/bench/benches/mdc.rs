use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use mdc_core::coupling::simulate_coupled_paths;
use mdc_core::dependency::compute_h_exact;
use mdc_core::process::{build_markov, WindowMixture};
use mdc_core::resolvent::{neumann_series, resolvent};
use mdc_core::sampling::stream_rng;
use mdc_core::synth::random_full_history_spec;
use mdc_core::{Alphabet, Budget};

fn window(n: usize) -> mdc_core::ProcessSpec {
    WindowMixture { width: 5, beta: 0.8, lag_decay: 0.25 }
        .build(Alphabet::new(3).unwrap(), n)
        .unwrap()
}

fn interdependence(c: &mut Criterion) {
    let mut g = c.benchmark_group("compute_h_exact");
    for n in [50, 200] {
        let spec = window(n);
        g.bench_with_input(BenchmarkId::new("window_w5_a3", n), &spec, |b, s| {
            b.iter(|| compute_h_exact(black_box(s), Budget::default()).unwrap())
        });
    }
    let full = random_full_history_spec(&mut stream_rng(1, 0), Alphabet::new(3).unwrap(), 6).unwrap();
    g.bench_function("full_history_n6_a3", |b| b.iter(|| compute_h_exact(black_box(&full), Budget::default()).unwrap()));
    g.finish();
}

fn resolvents(c: &mut Criterion) {
    let mut g = c.benchmark_group("resolvent");
    for n in [50, 200] {
        let h = compute_h_exact(&window(n), Budget::default()).unwrap();
        g.bench_with_input(BenchmarkId::new("back_substitution", n), &h, |b, h| b.iter(|| resolvent(black_box(h))));
        g.bench_with_input(BenchmarkId::new("neumann", n), &h, |b, h| b.iter(|| neumann_series(black_box(h))));
    }
    g.finish();
}

fn coupled_sampler(c: &mut Criterion) {
    let spec = build_markov(&[vec![0.9, 0.1], vec![0.2, 0.8]], &[1.0, 0.0], 50).unwrap();
    let mut g = c.benchmark_group("simulate_coupled_paths");
    g.sample_size(20);
    g.bench_function("markov_n50_10k", |b| {
        b.iter(|| simulate_coupled_paths(black_box(&spec), 0, &[], 0, 1, 10_000, 7).unwrap())
    });
    g.finish();
}

criterion_group!(benches, interdependence, resolvents, coupled_sampler);
criterion_main!(benches);
