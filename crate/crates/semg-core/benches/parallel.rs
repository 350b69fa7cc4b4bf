//! Sequential vs rayon-parallel timings for the data-parallel entry points:
//! independent R(G) curve points and truth-function grid fits.
//!
//! Run `cargo bench -p semg-core` for both paths; with
//! `--no-default-features` only the sequential benches compile.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use semg_core::learn::{lbi_parametric, ParamGrid};
use semg_core::prob::{gaussian_truth, SemanticChannel, Source};
use semg_core::rate::{solve_rg_points, SolveOptions};

fn fixture(n_points: usize) -> (Source, SemanticChannel, Vec<f64>) {
    let values: Vec<f64> = (0..n_points).map(|v| v as f64).collect();
    let source = Source::uniform(n_points);
    let span = n_points as f64;
    let sem = SemanticChannel::from_columns(vec![
        gaussian_truth(&values, 0.2 * span, 0.1 * span).unwrap(),
        gaussian_truth(&values, 0.5 * span, 0.15 * span).unwrap(),
        gaussian_truth(&values, 0.8 * span, 0.2 * span).unwrap(),
    ])
    .unwrap();
    (source, sem, values)
}

fn s_grid() -> Vec<f64> {
    (1..=24).map(|k| 0.25 * k as f64).collect()
}

fn bench_rg_points(c: &mut Criterion) {
    let (source, sem, _) = fixture(96);
    let grid = s_grid();
    let opts = SolveOptions::default();
    let mut group = c.benchmark_group("rg_points");
    group.bench_with_input(BenchmarkId::new("seq", grid.len()), &grid, |b, grid| {
        b.iter(|| solve_rg_points(&source, &sem, grid, &opts).unwrap())
    });
    #[cfg(feature = "parallel")]
    group.bench_with_input(BenchmarkId::new("par", grid.len()), &grid, |b, grid| {
        b.iter(|| semg_core::rate::par_solve_rg_points(&source, &sem, grid, &opts).unwrap())
    });
    group.finish();
}

fn bench_truth_fit(c: &mut Criterion) {
    let (source, _, values) = fixture(128);
    let mut cond: Vec<f64> = gaussian_truth(&values, 40.0, 9.0).unwrap();
    let total: f64 = cond.iter().sum();
    for x in cond.iter_mut() {
        *x /= total;
    }
    let grid = ParamGrid::gaussian_for_support(&values, 24);
    let mut group = c.benchmark_group("truth_fit");
    group.bench_with_input(BenchmarkId::new("seq", grid.len()), &grid, |b, grid| {
        b.iter(|| lbi_parametric(&cond, &source, &values, grid).unwrap())
    });
    #[cfg(feature = "parallel")]
    group.bench_with_input(BenchmarkId::new("par", grid.len()), &grid, |b, grid| {
        b.iter(|| semg_core::learn::par_lbi_parametric(&cond, &source, &values, grid).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_rg_points, bench_truth_fit);
criterion_main!(benches);
