use proptest::prelude::*;

use metawkb_core::classical::{flow, shear_from_lagrangians, symplectic_form, LagrangianLine, DEFAULT_DT_MAX};
use metawkb_core::experiment::SampleTime;
use metawkb_core::metaplectic::{apply_l, apply_metaplectic, MetaplecticKernel, Profile};
use metawkb_core::models::{Dispersion, HamiltonianModel, Potential, QuadraticPhase};
use metawkb_core::phase_space::{hbar_fourier, Direction, GridSpec, PhasePoint, WaveFunction};
use metawkb_core::quantum::{apply_kick, exact_propagate};
use metawkb_core::Complex64;

fn model(i: usize) -> HamiltonianModel {
    match i {
        0 => HamiltonianModel::free(),
        1 => HamiltonianModel::barrier(1.3).unwrap(),
        2 => HamiltonianModel::integrable(Dispersion::quartic(0.1)),
        3 => HamiltonianModel::potential(Potential::quadratic(2.0)),
        _ => HamiltonianModel::kicked_harmonic(2.0).unwrap(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tangent_maps_are_symplectic(i in 0usize..5, p in -1.0..1.0f64, q in -1.0..1.0f64, t in 0.0..4.0f64) {
        let m = flow(&model(i), PhasePoint::new(p, q), t, DEFAULT_DT_MAX).unwrap().tangent;
        prop_assert!((m.det() - 1.0).abs() < 1e-9, "det {}", m.det());
    }

    #[test]
    fn flows_compose(i in 0usize..5, p in -1.0..1.0f64, q in -1.0..1.0f64, s in 0.0..2.0f64, t in 0.0..2.0f64) {
        let m = model(i);
        let z = PhasePoint::new(p, q);
        let direct = flow(&m, z, s + t, DEFAULT_DT_MAX).unwrap();
        let first = flow(&m, z, s, DEFAULT_DT_MAX).unwrap();
        // only autonomous models compose from an arbitrary start time
        if !m.is_kicked() {
            let second = flow(&m, first.end_point, t, DEFAULT_DT_MAX).unwrap();
            let both = first.then(&second);
            prop_assert!(both.end_point.distance(&direct.end_point) < 1e-8);
            prop_assert!((both.action - direct.action).abs() < 1e-8);
        }
    }

    #[test]
    fn fourier_round_trip(hbar in 0.005..0.2f64, p in -1.0..1.0f64, q in -1.0..1.0f64, br in -1.0..1.0f64, bi in 0.5..2.0f64) {
        let grid = GridSpec::symmetric(6.0, 1024).unwrap();
        let psi = WaveFunction::coherent_state(grid, hbar, PhasePoint::new(p, q), Complex64::new(br, bi)).unwrap();
        let hat = hbar_fourier(&psi, Direction::Forward, grid).unwrap();
        let parseval = hat.norm_sqr() / (2.0 * std::f64::consts::PI * hbar);
        prop_assert!((parseval - psi.norm_sqr()).abs() < 1e-10, "{parseval}");
        let back = hbar_fourier(&hat, Direction::Inverse, grid).unwrap();
        prop_assert!(back.distance(&psi).unwrap() < 1e-12);
    }

    #[test]
    fn metaplectic_multiplier_is_unitary(c in -3.0..3.0f64, q in -0.5..0.5f64, br in -1.0..1.0f64) {
        let hbar = 0.02;
        let grid = GridSpec::symmetric(6.0, 2048).unwrap();
        let a = apply_l(&Profile::gaussian(Complex64::new(br, 1.0)).unwrap(), q, hbar, grid).unwrap();
        let k = MetaplecticKernel { c_t: c, q_center: q, hbar };
        let out = apply_metaplectic(&k, &a).unwrap();
        prop_assert!((out.norm() - a.norm()).abs() < 1e-10);
        let back = apply_metaplectic(&MetaplecticKernel { c_t: -c, ..k }, &out).unwrap();
        prop_assert!(back.distance(&a).unwrap() < 1e-10);
    }

    #[test]
    fn shear_post_conditions(a1 in 0.0..3.1f64, a2 in 0.0..3.1f64, a in 0.0..3.1f64) {
        let line = |t: f64| LagrangianLine::new(PhasePoint::default(), t.cos(), t.sin()).unwrap();
        let (l1, l2, l) = (line(a1), line(a2), line(a));
        prop_assume!(l1.transversality(&l2) > 0.05 && l1.transversality(&l) > 0.05);
        let m = shear_from_lagrangians(&l1, &l2, &l).unwrap();
        let e1 = m.apply(l1.direction.0, l1.direction.1);
        let e2 = m.apply(l2.direction.0, l2.direction.1);
        let scale = 1.0 + m.frobenius();
        prop_assert!((e1.0 - l1.direction.0).abs() + (e1.1 - l1.direction.1).abs() < 1e-10 * scale);
        prop_assert!(symplectic_form(e2, l.direction).abs() < 1e-10 * scale);
        prop_assert!((m.det() - 1.0).abs() < 1e-10 * scale * scale);
    }

    #[test]
    fn initial_manifold_is_the_gradient_graph(p0 in -2.0..2.0f64, q0 in -2.0..2.0f64, alpha in -3.0..3.0f64, x in -2.0..2.0f64) {
        let ph = QuadraticPhase::new(p0, q0, alpha);
        let h = 1e-5;
        let fd = (ph.s0(x + h) - ph.s0(x - h)) / (2.0 * h);
        prop_assert!((fd - ph.momentum(x)).abs() < 1e-8);
        prop_assert_eq!(ph.point(x).p, p0 + alpha * (x - q0));
    }

    #[test]
    fn time_labels_round_trip(n in 0u32..50, side in 0usize..3) {
        let label = format!("{n}{}", ["", "-", "+"][side]);
        let t: SampleTime = label.parse().unwrap();
        prop_assert_eq!(t.to_string(), label);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn grid_propagation_is_unitary(i in 0usize..5, t in 0.0..3.0f64, p in -0.5..0.5f64) {
        let grid = GridSpec::symmetric(8.0, 4096).unwrap();
        let m = model(i);
        let psi = WaveFunction::coherent_state(grid, 0.02, PhasePoint::new(p, 0.0), Complex64::i()).unwrap();
        let out = exact_propagate(&m, &psi, t).unwrap();
        prop_assert!((out.norm() - psi.norm()).abs() < 1e-10);
        if m.is_kicked() {
            prop_assert!((apply_kick(&m, &out).norm() - psi.norm()).abs() < 1e-12);
        }
    }
}
