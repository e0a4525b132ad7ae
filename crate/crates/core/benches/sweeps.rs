//! Parallel vs sequential execution of the independent jobs behind the
//! threshold lattice, the p-sweep and the rational projector.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use diracgap::discretization::assemble_a;
use diracgap::grid::build_grid;
use diracgap::parallel;
use diracgap::spectral::gap_eigs;
use diracgap::threshold::{threshold_report, MatrixPotential};
use diracgap::tridiag::SymTridiagonal;
use diracgap::ModelParams;
use num_complex::Complex64;

type Mapper = fn(&[ModelParams], &(dyn Fn(&ModelParams) -> f64 + Sync)) -> Vec<f64>;

fn mappers() -> Vec<(&'static str, Mapper)> {
    #[cfg_attr(not(feature = "parallel"), allow(unused_mut))]
    let mut out: Vec<(&'static str, Mapper)> = vec![("sequential", |items, f| parallel::map_sequential(items, f))];
    #[cfg(feature = "parallel")]
    out.push(("parallel", |items, f| parallel::map_parallel(items, f)));
    out
}

fn lattice(c: &mut Criterion) {
    let points: Vec<ModelParams> = [0.5, 0.8, 1.0, 1.5, 2.0, 3.0]
        .iter()
        .flat_map(|&p| [0.2, 0.5, 0.8].map(|w| ModelParams::new(1.0, w, p, 0.0).unwrap()))
        .collect();
    let job = |pm: &ModelParams| threshold_report(&MatrixPotential::Soler(*pm), 1.0, 1.0).unwrap().match_defect;
    let mut group = c.benchmark_group("threshold_lattice");
    group.sample_size(10);
    for (name, map) in mappers() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| map(&points, &job)));
    }
    group.finish();
}

fn sweep(c: &mut Criterion) {
    let points: Vec<ModelParams> =
        [1.0, 1.25, 1.5, 2.0, 2.5, 3.0].iter().map(|&p| ModelParams::new(1.0, 0.5, p, 0.0).unwrap()).collect();
    let job = |pm: &ModelParams| {
        let grid = build_grid(40.0 / pm.kappa(), 8192).unwrap();
        gap_eigs(&assemble_a(pm, &grid)).unwrap().eigenvalues[0]
    };
    let mut group = c.benchmark_group("gap_sweep");
    group.sample_size(10);
    for (name, map) in mappers() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| map(&points, &job)));
    }
    group.finish();
}

fn projector_poles(c: &mut Criterion) {
    let n = 20_000;
    let t = SymTridiagonal::new((0..n).map(|k| (k as f64 * 0.37).sin()).collect(), vec![0.5; n - 1]);
    let rhs: Vec<f64> = (0..n).map(|k| (k % 7) as f64).collect();
    let shifts: Vec<f64> = (1..=24).map(|k| 0.01 * k as f64).collect();
    let solve = |s: &f64| t.solve_shifted_complex(Complex64::new(0.1, *s), &rhs)[0].re;
    let mut group = c.benchmark_group("projector_poles");
    group.bench_function("sequential", |b| b.iter(|| parallel::map_sequential(&shifts, solve)));
    #[cfg(feature = "parallel")]
    group.bench_function("parallel", |b| b.iter(|| parallel::map_parallel(&shifts, solve)));
    group.finish();
}

criterion_group!(benches, lattice, sweep, projector_poles);
criterion_main!(benches);
