use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use ewit_core::quantum::{full_grid, Sampler};
use ewit_core::smallmat::hermitian_eig;
use ewit_core::{
    ne_closed_form, ne_solve, spi_lambda_max, CorrelatorGrid, HermitianMatrix, MeasurementSet, ObservableSum,
    SolverOptions, SpiOptions,
};

fn qubit_grid(seed: u64) -> CorrelatorGrid {
    full_grid(&Sampler::new(seed).random_state((2, 2))).unwrap()
}

fn ne_solvers(c: &mut Criterion) {
    let g = qubit_grid(1);
    let three = MeasurementSet::parse("XX,XY,ZX", (2, 2)).unwrap();
    let opts = SolverOptions::default();
    c.bench_function("ne_solve/qubit_3", |b| b.iter(|| ne_solve(black_box(&g), Some(&three), &opts).unwrap()));
    c.bench_function("ne_solve/qubit_9", |b| b.iter(|| ne_solve(black_box(&g), None, &opts).unwrap()));
    let q = full_grid(&Sampler::new(2).random_state((3, 3))).unwrap();
    c.bench_function("ne_solve/qutrit_64", |b| b.iter(|| ne_solve(black_box(&q), None, &opts).unwrap()));
    let lshape = MeasurementSet::parse("XX,XY,YX", (2, 2)).unwrap();
    c.bench_function("ne_closed_form/lshape", |b| b.iter(|| ne_closed_form(&lshape, black_box(&g)).unwrap()));
}

fn spi(c: &mut Criterion) {
    let obs = ObservableSum::from_pauli_strings(&[(0.7, "XYZ"), (-0.4, "ZZX"), (0.9, "YYI"), (0.3, "IXZ")]).unwrap();
    let opts = SpiOptions::default();
    c.bench_function("spi/three_qubit_4_terms", |b| b.iter(|| spi_lambda_max(black_box(&obs), &opts).unwrap()));
}

fn eig(c: &mut Criterion) {
    let rho = Sampler::new(3).random_state((4, 4));
    let h = HermitianMatrix::symmetrized(rho.matrix()).unwrap();
    c.bench_function("hermitian_eig/16", |b| b.iter(|| hermitian_eig(black_box(&h))));
}

criterion_group!(benches, ne_solvers, spi, eig);
criterion_main!(benches);
