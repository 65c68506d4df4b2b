use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::DMatrix;
use yde_core::linalg::semigroup_constants;
use yde_core::paths::{greedy_times, p_variation};
use yde_core::pendulum::build_pendulum;
use yde_core::solver::solve_endpoint;
use yde_core::young::young_integral;
use yde_core::{FbmMethod, FbmSampler, FbmSpec, PendulumParams, TimeGrid};

fn unit_path(steps: usize, m: usize) -> yde_core::SamplePath {
    FbmSampler::new(&FbmSpec::new(0.75, m, TimeGrid::new(0.0, 1.0, 1.0 / steps as f64), 1))
        .unwrap()
        .sample_indexed(0)
}

fn pvar(c: &mut Criterion) {
    let mut g = c.benchmark_group("p_variation");
    for n in [256, 1024, 4096] {
        let x = unit_path(n, 2);
        g.bench_with_input(BenchmarkId::from_parameter(n), &x, |b, x| b.iter(|| p_variation(black_box(x), 1.5, 0.0, 1.0)));
    }
    g.finish();
    let x = unit_path(1024, 1);
    c.bench_function("greedy_times/1024", |b| b.iter(|| greedy_times(black_box(&x), 1.5, 0.1, 0.0, 1.0)));
}

fn fbm(c: &mut Criterion) {
    let mut g = c.benchmark_group("fbm_sample");
    for (name, method, n) in [
        ("circulant", FbmMethod::CirculantEmbedding, 4096),
        ("circulant", FbmMethod::CirculantEmbedding, 65536),
        ("cholesky", FbmMethod::Cholesky, 1024),
    ] {
        let spec = FbmSpec::new(0.75, 1, TimeGrid::new(0.0, 1.0, 1.0 / n as f64), 3).with_method(method);
        let sampler = FbmSampler::new(&spec).unwrap();
        g.bench_function(BenchmarkId::new(name, n), |b| {
            let mut i = 0;
            b.iter(|| {
                i += 1;
                sampler.sample_indexed(i)
            })
        });
    }
    g.finish();
}

fn integrate(c: &mut Criterion) {
    let x = unit_path(1024, 1);
    let y = x.map(1, |_, v, out| out[0] = v[0].sin()).unwrap();
    c.bench_function("young_integral/1024x8", |b| b.iter(|| young_integral(black_box(&y), &x, 0.0, 1.0, 8)));

    let params = PendulumParams::default().with_sigma([0.1, 0.0, 0.0, 0.1]);
    let sys = build_pendulum(&params).unwrap();
    let spec = FbmSpec { hurst: params.hurst.to_vec(), ..FbmSpec::new(0.75, 4, TimeGrid::new(-20.0, 0.0, 1.0 / 64.0), 5) };
    let x4 = FbmSampler::new(&spec).unwrap().sample_indexed(0);
    c.bench_function("solve_pendulum/20x64", |b| b.iter(|| solve_endpoint(&sys, black_box(&x4), &[1.0, 0.0], -20.0, 0.0, 1.0 / 64.0)));
}

fn semigroup(c: &mut Criterion) {
    let a = DMatrix::from_row_slice(3, 3, &[-1.0, 2.0, 0.0, 0.0, -1.0, 2.0, 0.0, 0.0, -1.0]);
    c.bench_function("semigroup_constants/3x3", |b| b.iter(|| semigroup_constants(black_box(&a), 0.1)));
}

criterion_group!(benches, pvar, fbm, integrate, semigroup);
criterion_main!(benches);
