//! Cost of each stage: classification, eigenfunctions, the extended resolvent, the grid
//! oracle and the skeleton Monte Carlo.

use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use feller_core::boundary::extended_resolvent;
use feller_core::eigen::{solve, PicardConfig};
use feller_core::fixtures;
use feller_core::grid::{Grid, GridSpec};
use feller_core::minimal::ResolventKernel;
use feller_core::oracle::discretize;
use feller_core::sim::{estimate, McConfig};

fn classify(c: &mut Criterion) {
    let specs = fixtures::classification_specs();
    c.bench_function("classify/four-kinds", |b| {
        b.iter(|| specs.iter().map(|(_, s)| s.classify().unwrap()).collect::<Vec<_>>())
    });
}

fn eigen(c: &mut Criterion) {
    let fx = fixtures::elastic_jumps();
    let classes = fx.spec.classify().unwrap();
    let mut group = c.benchmark_group("eigen");
    for nodes in [501usize, 2001, 8001] {
        let grid = Arc::new(Grid::build(fx.spec.clone(), classes, &GridSpec { nodes, ..fx.grid }));
        group.throughput(Throughput::Elements(nodes as u64));
        group.bench_with_input(BenchmarkId::from_parameter(nodes), &grid, |b, grid| {
            b.iter(|| solve(grid.clone(), black_box(fx.r), &PicardConfig::default()).unwrap())
        });
    }
    group.finish();
}

fn resolvent(c: &mut Criterion) {
    let mut group = c.benchmark_group("resolvent");
    for fx in [fixtures::elastic_jumps(), fixtures::entrance_sticky(), fixtures::ou_sticky_infinity()] {
        let classes = fx.spec.classify().unwrap();
        let grid = Arc::new(Grid::build(fx.spec.clone(), classes, &fx.grid));
        let kernel = ResolventKernel::new(Arc::new(solve(grid, fx.r, &PicardConfig::default()).unwrap()));
        group.bench_function(BenchmarkId::new("analytic", fx.name), |b| {
            b.iter(|| extended_resolvent(&fx.data, &kernel, &fx.g, Some(fx.case)).unwrap())
        });
        let chain = discretize(fx.spec.clone(), classes, &fx.data, fx.grid.nodes, &fx.grid).unwrap();
        group.bench_function(BenchmarkId::new("grid-oracle", fx.name), |b| {
            b.iter(|| chain.solve_resolvent(&fx.g, fx.r).unwrap())
        });
    }
    group.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let fx = fixtures::sticky_reflecting();
    let paths = 10_000;
    let cfg = McConfig { paths, ..McConfig::default() };
    let sk = estimate::skeleton(&fx.data, fx.spec.clone(), &fx.g, fx.r, &cfg).unwrap();
    let mut group = c.benchmark_group("monte-carlo");
    group.sample_size(10).throughput(Throughput::Elements(paths as u64));
    group.bench_function("skeleton-resolvent", |b| b.iter(|| sk.resolvent(black_box(0.25), paths, 1).unwrap()));
    group.finish();
}

criterion_group!(benches, classify, eigen, resolvent, monte_carlo);
criterion_main!(benches);
