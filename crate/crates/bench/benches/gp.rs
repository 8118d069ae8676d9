use std::f64::consts::PI;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gp_audio_bench::{irregular_times, model, signal};
use gp_audio_core::{resample_to_8k, AudioBuffer, Param};

fn bench_gram(c: &mut Criterion) {
    let mut group = c.benchmark_group("gram");
    group.sample_size(10);
    for n in [1000, 2000, 4000] {
        let m = model(n);
        let data = signal(n);
        group.bench_with_input(BenchmarkId::new("uniform", n), &n, |b, _| {
            b.iter(|| m.kernel.gram(data.times(), data.times()).unwrap())
        });
        let times = irregular_times(n);
        group.bench_with_input(BenchmarkId::new("irregular", n), &n, |b, _| {
            b.iter(|| m.kernel.gram(&times, &times).unwrap())
        });
    }
    group.finish();
}

fn bench_lml_gradient(c: &mut Criterion) {
    let mut group = c.benchmark_group("lml_gradient");
    group.sample_size(10);
    let omegas: Vec<Param> = (0..3).map(Param::omega).collect();
    for n in [1000, 2000, 4000] {
        let m = model(n);
        let data = signal(n);
        group.bench_with_input(BenchmarkId::new("condition", n), &n, |b, _| {
            b.iter(|| m.condition(&data).unwrap())
        });
        let posterior = m.condition(&data).unwrap();
        group.bench_with_input(BenchmarkId::new("lml_and_gradient", n), &n, |b, _| {
            b.iter(|| posterior.lml_and_gradient(&omegas).unwrap())
        });
    }
    group.finish();
}

fn bench_predict(c: &mut Criterion) {
    let mut group = c.benchmark_group("predict");
    group.sample_size(10);
    let n = 2000;
    let posterior = model(n).condition(&signal(n)).unwrap();
    for n_test in [100, 400] {
        let test: Vec<f64> = (0..n_test).map(|i| 0.1 + i as f64 / 8000.0).collect();
        group.bench_with_input(BenchmarkId::new("variance", n_test), &n_test, |b, _| {
            b.iter(|| posterior.predict(&test, false).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("full_covariance", n_test), &n_test, |b, _| {
            b.iter(|| posterior.predict(&test, true).unwrap())
        });
    }
    group.finish();
}

fn bench_resample(c: &mut Criterion) {
    let samples = (0..44_100)
        .map(|i| (2.0 * PI * 440.0 * i as f64 / 44_100.0).sin())
        .collect();
    let audio = AudioBuffer::new(44_100, samples).unwrap();
    c.bench_function("resample_1s_44k1", |b| b.iter(|| resample_to_8k(&audio).unwrap()));
}

criterion_group!(gram, bench_gram);
criterion_group!(inference, bench_lml_gradient, bench_predict);
criterion_group!(audio, bench_resample);
criterion_main!(gram, inference, audio);
