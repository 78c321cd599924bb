use std::sync::Arc;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, Criterion};
use pacewave_core::{
    leading_order_local, schrodinger_ground_state, solve_pacemaker_local, DriftLaplacian, Field,
    Grid, Inhomogeneity, OracleOptions, Simulator, SimulatorOptions, SpectralEngine,
};

fn engine(points: usize) -> Arc<SpectralEngine> {
    SpectralEngine::new(&Grid::new(60.0, points).unwrap()).unwrap()
}

fn bench_multiplier(c: &mut Criterion) {
    let engine = engine(1024);
    let f = Field::from_fn(&engine.grid, |x| (-x * x).exp());
    let symbol = engine.sample_symbol(|l| num_complex::Complex64::new(-(l * l), 0.0));
    c.bench_function("padded multiplier 1024", |b| {
        b.iter(|| engine.apply_multiplier(&f.values, &symbol).unwrap())
    });
}

fn bench_bordered_solve(c: &mut Criterion) {
    let engine = engine(1024);
    let op = DriftLaplacian::new(&engine, 0.3).unwrap();
    let f = Field::from_fn(&engine.grid, |x| -x * (-x * x).exp());
    c.bench_function("bordered drift solve 1024", |b| {
        b.iter(|| op.solve(&f).unwrap())
    });
}

fn bench_corrector(c: &mut Criterion) {
    let engine = engine(512);
    let forcing = Inhomogeneity::gaussian_dip(&engine.grid).unwrap();
    let lead = leading_order_local(&engine, &forcing).unwrap();
    let mut group = c.benchmark_group("corrector");
    group
        .sample_size(10)
        .measurement_time(Duration::from_secs(20));
    group.bench_function("pacemaker corrector 512", |b| {
        b.iter(|| {
            solve_pacemaker_local(&engine, &forcing, 0.1, &lead, &Default::default()).unwrap()
        })
    });
    group.finish();
}

fn bench_simulator(c: &mut Criterion) {
    let engine = engine(512);
    let forcing = Inhomogeneity::gaussian_dip(&engine.grid).unwrap();
    let sim = Simulator::local(&engine, &forcing, 0.1).unwrap();
    let opts = SimulatorOptions {
        duration: 5.0,
        sample_interval: 5.0,
        ..Default::default()
    };
    let mut group = c.benchmark_group("simulator");
    group
        .sample_size(10)
        .measurement_time(Duration::from_secs(20));
    group.bench_function("hundred steps 512", |b| {
        b.iter(|| {
            sim.run(Field::zeros(&engine.grid), Default::default(), &opts)
                .unwrap()
        })
    });
    group.finish();
}

fn bench_ground_state(c: &mut Criterion) {
    let opts = OracleOptions::default();
    let mut group = c.benchmark_group("oracle");
    group
        .sample_size(10)
        .measurement_time(Duration::from_secs(20));
    group.bench_function("ground state, gaussian well", |b| {
        b.iter(|| schrodinger_ground_state(|x| -0.1 * (-x * x).exp(), &opts).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_multiplier,
    bench_bordered_solve,
    bench_corrector,
    bench_simulator,
    bench_ground_state
);
criterion_main!(benches);
