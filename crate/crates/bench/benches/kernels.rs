use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use num_complex::Complex64;

use metawkb_core::classical::flow;
use metawkb_core::metaplectic::{apply_metaplectic, ExtendedWkb, MetaplecticKernel, Profile, WkbOptions};
use metawkb_core::models::{HamiltonianModel, QuadraticPhase};
use metawkb_core::phase_space::{GridSpec, PhasePoint, SpectralPlan, WaveFunction};
use metawkb_core::quantum::{kho_step, split_operator_step};
use metawkb_core::transport::{build_bundle, transport_operator, TransportMap};

const HBAR: f64 = 0.0008;

fn coherent(grid: GridSpec) -> WaveFunction {
    WaveFunction::coherent_state(grid, HBAR, PhasePoint::new(0.1, -0.2), Complex64::i()).unwrap()
}

fn fft_multiplier(c: &mut Criterion) {
    let grid = GridSpec::symmetric(8.0, 16384).unwrap();
    let plan = SpectralPlan::new(grid, HBAR);
    let mult = plan.multiplier(|p| Complex64::from_polar(1.0, -0.05 * p * p / HBAR));
    let psi = coherent(grid);
    c.bench_function("fft_multiplier_16384", |b| {
        b.iter_batched(
            || psi.values().to_vec(),
            |mut v| plan.apply_multiplier(&mut v, &mult),
            BatchSize::LargeInput,
        )
    });
}

fn split_step(c: &mut Criterion) {
    let grid = GridSpec::symmetric(16.0, 8192).unwrap();
    let model = HamiltonianModel::barrier(1.0).unwrap();
    let psi = WaveFunction::coherent_state(grid, 0.01, PhasePoint::new(0.0, -1.0), Complex64::i()).unwrap();
    c.bench_function("split_step_barrier_8192", |b| {
        b.iter(|| split_operator_step(&model, &psi, 0.01).unwrap())
    });
    let kgrid = GridSpec::symmetric(8.0, 16384).unwrap();
    let kpsi = coherent(kgrid);
    c.bench_function("kho_period_16384", |b| b.iter(|| kho_step(2.0, &kpsi, 0).unwrap()));
}

fn transport(c: &mut Criterion) {
    let model = HamiltonianModel::barrier(1.0).unwrap();
    let phase = QuadraticPhase::new(0.0, 0.0, 0.5);
    let bundle = build_bundle(&model, phase, (-0.6, 0.6), 1025, &[0.0, 2.0]).unwrap();
    let map = TransportMap::new(bundle).unwrap();
    let grid = GridSpec::symmetric(16.0, 8192).unwrap();
    let amp = WaveFunction::coherent_state(grid, 0.01, PhasePoint::new(0.0, 0.0), Complex64::i()).unwrap();
    c.bench_function("transport_operator_8192", |b| {
        b.iter(|| transport_operator(&map, 2.0, &amp).unwrap())
    });
}

fn metaplectic(c: &mut Criterion) {
    let grid = GridSpec::symmetric(8.0, 16384).unwrap();
    let kernel = MetaplecticKernel { c_t: 0.7, q_center: 0.1, hbar: HBAR };
    let amp = coherent(grid);
    c.bench_function("metaplectic_apply_16384", |b| {
        b.iter(|| apply_metaplectic(&kernel, &amp).unwrap())
    });
    let model = HamiltonianModel::kicked_harmonic(2.0).unwrap();
    let phase = QuadraticPhase::from_theta(0.0, 0.0, 0.0).unwrap();
    let mut group = c.benchmark_group("extended_wkb");
    group.sample_size(10);
    group.bench_function("kho_prepare_t4", |b| {
        b.iter(|| {
            ExtendedWkb::prepare(&model, phase, &Profile::ground(), HBAR, grid, &[4.0], WkbOptions::default())
                .unwrap()
                .state(4.0)
                .unwrap()
        })
    });
    group.finish();
}

fn classical_flow(c: &mut Criterion) {
    let model = HamiltonianModel::barrier(1.0).unwrap();
    c.bench_function("flow_barrier_t5", |b| {
        b.iter(|| flow(&model, PhasePoint::new(0.3, -0.2), 5.0, 0.01).unwrap())
    });
}

criterion_group!(benches, fft_multiplier, split_step, transport, metaplectic, classical_flow);
criterion_main!(benches);
