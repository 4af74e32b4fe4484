use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use ppsolve::kernel::periodic_linear_solve;
use ppsolve::shooting::{averaged_seed, find_periodic};
use ppsolve::{examples, OperatorContext, PeriodicExpr, ShootingOptions};

fn operator(c: &mut Criterion) {
    let mut group = c.benchmark_group("apply_t");
    for n in [256, 512, 1024] {
        let ctx = OperatorContext::new(&examples::example1(), n).unwrap();
        let x = ctx.default_seed();
        group
            .bench_with_input(BenchmarkId::from_parameter(n), &x, |b, x| b.iter(|| ctx.apply_t(black_box(x)).unwrap()));
    }
    group.finish();

    let ctx = OperatorContext::with_default_grid(&examples::example1()).unwrap();
    c.bench_function("damped_picard/example1", |b| {
        b.iter(|| ctx.damped_picard(&ctx.default_seed(), 0.5, 1e-10, 2000).unwrap())
    });
    c.bench_function("context/example2", |b| {
        b.iter(|| OperatorContext::with_default_grid(&examples::example2()).unwrap())
    });
}

fn kernel(c: &mut Criterion) {
    let a = PeriodicExpr::parse("1+sin(5*t)", std::f64::consts::TAU).unwrap();
    c.bench_function("periodic_linear_solve/512", |b| {
        b.iter(|| periodic_linear_solve(&a, |t| 2.0 + t.sin(), black_box(512)).unwrap())
    });
}

fn shooting(c: &mut Criterion) {
    for (id, coeffs) in examples::all() {
        let seed = averaged_seed(&coeffs).unwrap();
        c.bench_function(&format!("find_periodic/{id}"), |b| {
            b.iter(|| find_periodic(&coeffs, black_box(seed), &ShootingOptions::default()).unwrap())
        });
    }
}

criterion_group!(benches, operator, kernel, shooting);
criterion_main!(benches);
