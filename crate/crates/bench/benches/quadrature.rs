use std::sync::Arc;

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use hilfer_core::quadrature::ProductRule;
use hilfer_core::{Path, PsiMap, RlOperator, TimeGrid};

fn build_weights(c: &mut Criterion) {
    let mut group = c.benchmark_group("product_rule_build");
    for n in [256usize, 1024] {
        let grid = TimeGrid::new(0.0, 1.0, 1.0, n).unwrap();
        group.bench_with_input(BenchmarkId::new("linear", n), &grid, |b, g| {
            b.iter(|| ProductRule::new(g, &PsiMap::Identity, black_box(0.5)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("weighted", n), &grid, |b, g| {
            b.iter(|| ProductRule::weighted(g, &PsiMap::Identity, black_box(0.5), -0.5).unwrap())
        });
    }
    group.finish();
}

fn apply_integral(c: &mut Criterion) {
    let mut group = c.benchmark_group("rl_integral_apply");
    for n in [256usize, 1024, 2048] {
        let grid = Arc::new(TimeGrid::new(1.0, std::f64::consts::E, 1.0, n).unwrap());
        let op = RlOperator::new(grid.clone(), PsiMap::Log, 0.3).unwrap();
        let f = Path::from_fn(grid, |t| t.sin());
        group.bench_with_input(BenchmarkId::from_parameter(n), &f, |b, f| {
            b.iter(|| op.apply(black_box(f)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, build_weights, apply_integral);
criterion_main!(benches);
