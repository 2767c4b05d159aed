use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use lapd::metrics::sliced_w2;
use lapd::rng::chain_stream;
use lapd::sampler::{lapd_step, ChainState, ScheduleSpec};
use lapd::targets::grad_f;
use lapd::{GaussianMixtureTarget, Potential};

fn symmetric_mixture(d: usize) -> GaussianMixtureTarget {
    let mut a = vec![0.0; d];
    a[0] = 1.0;
    let b = a.iter().map(|x| -x).collect();
    GaussianMixtureTarget::new(vec![a, b], 0.1).unwrap()
}

fn bench_grad(c: &mut Criterion) {
    let mut group = c.benchmark_group("grad_f");
    for d in [8, 128] {
        let means = (0..4).map(|k| (0..d).map(|j| ((k * d + j) as f64).sin()).collect()).collect();
        let mix = GaussianMixtureTarget::new(means, 0.1).unwrap();
        let w: Vec<f64> = (0..d).map(|j| (j as f64).cos()).collect();
        group.bench_with_input(BenchmarkId::from_parameter(d), &w, |b, w| {
            b.iter(|| grad_f(&mix, black_box(w)).unwrap())
        });
    }
    group.finish();
}

fn bench_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("lapd_step");
    group.sample_size(20);
    for d in [2, 32] {
        let mix = symmetric_mixture(d);
        let schedule = ScheduleSpec::varying(mix.constants(), 0.13).unwrap();
        let mut state = ChainState::gaussian(10_000, d, 0.0, 1.0, 0).unwrap();
        group.bench_function(BenchmarkId::new("10k_chains", d), |b| {
            b.iter(|| lapd_step(&mut state, &mix, &schedule).unwrap())
        });
    }
    group.finish();
}

fn bench_sliced_w2(c: &mut Criterion) {
    let d = 16;
    let n = 5_000;
    let p: Vec<f64> = (0..n * d).map(|i| (i as f64 * 0.37).sin()).collect();
    let q: Vec<f64> = (0..n * d).map(|i| (i as f64 * 0.91).cos()).collect();
    c.bench_function("sliced_w2/5k_x16_32proj", |b| {
        b.iter(|| sliced_w2(black_box(&p), black_box(&q), d, 32, &mut chain_stream(0, 0)).unwrap())
    });
}

criterion_group!(benches, bench_grad, bench_step, bench_sliced_w2);
criterion_main!(benches);
