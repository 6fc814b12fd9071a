use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fraclab_bench::{bump2s, params, sign_data};
use fraclab_core::kernels::psi_radial;
use fraclab_core::poisson::poisson_extend;
use fraclab_core::{constants_for, frac_laplacian_point, riesz_potential, Ball, CompactDensity, Point, QuadSpec};

fn constants(c: &mut Criterion) {
    c.bench_function("constants_for", |b| b.iter(|| constants_for(black_box(params(3, 0.37)))));
}

fn psi(c: &mut Criterion) {
    let p = params(2, 0.5);
    psi_radial(p, 2.0);
    c.bench_function("psi_radial (cached table)", |b| b.iter(|| psi_radial(p, black_box(2.345))));
}

fn frac_laplacian(c: &mut Criterion) {
    let spec = QuadSpec::default();
    let mut g = c.benchmark_group("frac_laplacian_point");
    g.sample_size(10);
    for n in 1..=3 {
        let u = bump2s(n, 0.5);
        let x = Point::on_axis(n, 0.3);
        g.bench_with_input(BenchmarkId::new("bump2s", n), &n, |b, &n| {
            b.iter(|| frac_laplacian_point(params(n, 0.5), &u, &x, &spec).unwrap())
        });
    }
    g.finish();
}

fn poisson(c: &mut Criterion) {
    let spec = QuadSpec::default();
    let mut g = c.benchmark_group("poisson_extend");
    g.sample_size(10);
    for n in 1..=3 {
        let ball = Ball::centered(n, 1.0).unwrap();
        let data = sign_data(n);
        let x = Point::on_axis(n, 0.4);
        g.bench_with_input(BenchmarkId::new("sign", n), &n, |b, &n| {
            b.iter(|| poisson_extend(params(n, 0.4), &ball, &data, &x, &spec).unwrap())
        });
    }
    g.finish();
}

fn riesz(c: &mut Criterion) {
    let spec = QuadSpec::default();
    let f = CompactDensity::smooth_bump(3, 1.0).unwrap();
    let mut g = c.benchmark_group("riesz_potential");
    g.sample_size(10);
    for d in [0.3, 3.0] {
        let x = Point::on_axis(3, d);
        g.bench_with_input(BenchmarkId::new("bump n=3", d), &d, |b, _| {
            b.iter(|| riesz_potential(params(3, 0.5), &f, &x, 1.0, &spec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, constants, psi, frac_laplacian, poisson, riesz);
criterion_main!(benches);
