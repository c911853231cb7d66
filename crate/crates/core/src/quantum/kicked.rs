use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::phase;
use super::split::{PropagationConfig, QuadraticPropagator, SplitOperator};
use crate::error::{Error, Result};
use crate::models::HamiltonianModel;
use crate::phase_space::{GridSpec, WaveFunction};

/// How the harmonic segment between kicks is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HarmonicScheme {
    /// Exact chirp factorisation of the rotation.
    ExactShear,
    /// Strang splitting with this many steps per unit time.
    Strang { substeps: usize },
}

/// Multiplies by the kick `e^{-i K cos(q) / hbar}`.
pub fn apply_kick(model: &HamiltonianModel, psi: &WaveFunction) -> WaveFunction {
    let mut out = psi.clone();
    let hbar = psi.hbar();
    out.multiply_by(|q| phase(-model.kick_potential(q) / hbar));
    out
}

/// Kicked harmonic oscillator on a fixed grid. States at integer times are
/// taken just before that time's kick, so one period from `n` to `n + 1` is
/// the kick followed by a unit harmonic rotation.
#[derive(Debug, Clone)]
pub struct KickedPropagator {
    model: HamiltonianModel,
    grid: GridSpec,
    hbar: f64,
    scheme: HarmonicScheme,
    kick: Vec<Complex64>,
    unit: Rotation,
}

#[derive(Debug, Clone)]
enum Rotation {
    Exact(QuadraticPropagator),
    Strang(SplitOperator, usize),
}

impl Rotation {
    fn new(scheme: HarmonicScheme, tau: f64, grid: GridSpec, hbar: f64) -> Result<Self> {
        Ok(match scheme {
            HarmonicScheme::ExactShear => Rotation::Exact(QuadraticPropagator::new(1.0, tau, grid, hbar)?),
            HarmonicScheme::Strang { substeps } => {
                let steps = ((tau.abs() * substeps as f64).ceil() as usize).max(1);
                let harmonic = HamiltonianModel::potential(crate::models::Potential::harmonic());
                let op = SplitOperator::new(
                    &harmonic,
                    PropagationConfig {
                        dt: tau / steps as f64,
                        grid,
                        hbar,
                    },
                )?;
                Rotation::Strang(op, steps)
            }
        })
    }

    fn apply(&self, values: &mut [Complex64]) {
        match self {
            Rotation::Exact(p) => p.apply_in_place(values),
            Rotation::Strang(op, steps) => {
                for _ in 0..*steps {
                    op.step_in_place(values);
                }
            }
        }
    }
}

impl KickedPropagator {
    pub fn new(model: &HamiltonianModel, grid: GridSpec, hbar: f64, scheme: HarmonicScheme) -> Result<Self> {
        if !model.is_kicked() {
            return Err(Error::Unsupported(format!(
                "model '{}' has no kicks",
                model.name()
            )));
        }
        if let HarmonicScheme::Strang { substeps: 0 } = scheme {
            return Err(Error::InvalidParameter("substeps must be positive".into()));
        }
        let kick = grid.points().map(|q| phase(-model.kick_potential(q) / hbar)).collect();
        Ok(Self {
            model: model.clone(),
            grid,
            hbar,
            scheme,
            kick,
            unit: Rotation::new(scheme, 1.0, grid, hbar)?,
        })
    }

    pub fn scheme(&self) -> HarmonicScheme {
        self.scheme
    }

    fn check(&self, psi: &WaveFunction) -> Result<()> {
        if !psi.grid().same_as(&self.grid) || psi.hbar() != self.hbar {
            return Err(Error::IncompatibleGrid("state does not match the propagator".into()));
        }
        Ok(())
    }

    /// One period: kick, then a unit rotation.
    pub fn period_in_place(&self, values: &mut [Complex64]) {
        for (v, k) in values.iter_mut().zip(&self.kick) {
            *v *= k;
        }
        self.unit.apply(values);
    }

    /// Forward evolution from `t0` to `t1 >= t0`.
    pub fn evolve_between(&self, psi: &WaveFunction, t0: f64, t1: f64) -> Result<WaveFunction> {
        self.check(psi)?;
        if t1 < t0 {
            return Err(Error::InvalidParameter(format!("cannot run backwards from {t0} to {t1}")));
        }
        let mut values = psi.values().to_vec();
        let mut t = t0;
        while t < t1 {
            let whole = t == t.floor();
            let next = (t.floor() + 1.0).min(t1);
            if whole && next - t == 1.0 {
                self.period_in_place(&mut values);
            } else {
                if whole {
                    for (v, k) in values.iter_mut().zip(&self.kick) {
                        *v *= k;
                    }
                }
                Rotation::new(self.scheme, next - t, self.grid, self.hbar)?.apply(&mut values);
            }
            t = next;
        }
        psi.with_values(values)
    }

    /// States at each of `times` (ascending), starting from `psi` at time 0.
    pub fn evolve_series(&self, psi: &WaveFunction, times: &[f64]) -> Result<Vec<WaveFunction>> {
        let mut out = Vec::with_capacity(times.len());
        let mut current = psi.clone();
        let mut t = 0.0;
        for &target in times {
            current = self.evolve_between(&current, t, target)?;
            t = target;
            out.push(current.clone());
        }
        Ok(out)
    }

    pub fn model(&self) -> &HamiltonianModel {
        &self.model
    }
}

/// One period of the kicked oscillator with `substeps` Strang steps for the
/// rotation (`0` selects the exact factorisation).
pub fn kho_step(k: f64, psi: &WaveFunction, substeps: usize) -> Result<WaveFunction> {
    let model = HamiltonianModel::kicked_harmonic(k)?;
    let scheme = if substeps == 0 {
        HarmonicScheme::ExactShear
    } else {
        HarmonicScheme::Strang { substeps }
    };
    KickedPropagator::new(&model, *psi.grid(), psi.hbar(), scheme)?.evolve_between(psi, 0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::{flow, DEFAULT_DT_MAX};
    use crate::phase_space::PhasePoint;

    fn ground(grid: GridSpec, hbar: f64, p: f64, q: f64) -> WaveFunction {
        WaveFunction::coherent_state(grid, hbar, PhasePoint::new(p, q), Complex64::i()).unwrap()
    }

    #[test]
    fn unkicked_is_pure_rotation() {
        let grid = GridSpec::symmetric(6.0, 1024).unwrap();
        let hbar = 0.02;
        let psi = ground(grid, hbar, 0.0, 1.0);
        let out = kho_step(0.0, &psi, 0).unwrap();
        assert!((out.norm() - psi.norm()).abs() < 1e-12);
        // coherent states of the unit oscillator stay coherent
        let (s, c) = 1f64.sin_cos();
        let expect = ground(grid, hbar, -s, c);
        assert!(out.fidelity(&expect).unwrap() > 1.0 - 1e-10);
    }

    #[test]
    fn strang_converges_to_exact_rotation() {
        let grid = GridSpec::symmetric(6.0, 2048).unwrap();
        let hbar = 0.01;
        let psi = ground(grid, hbar, 0.2, -0.4);
        let exact = kho_step(2.0, &psi, 0).unwrap();
        let e = |n: usize| kho_step(2.0, &psi, n).unwrap().distance(&exact).unwrap();
        let (e1, e2) = (e(200), e(400));
        assert!((e1 / e2 - 4.0).abs() < 0.2, "{e1} {e2}");
        assert!(e(6400) < 1e-5);
        assert!((kho_step(2.0, &psi, 200).unwrap().norm() - psi.norm()).abs() < 1e-10);
    }

    #[test]
    fn fractional_times_compose() {
        let grid = GridSpec::symmetric(6.0, 2048).unwrap();
        let hbar = 0.01;
        let m = HamiltonianModel::kicked_harmonic(2.0).unwrap();
        let prop = KickedPropagator::new(&m, grid, hbar, HarmonicScheme::ExactShear).unwrap();
        let psi = ground(grid, hbar, 0.0, 0.3);
        let direct = prop.evolve_between(&psi, 0.0, 2.0).unwrap();
        let a = prop.evolve_between(&psi, 0.0, 0.4).unwrap();
        let b = prop.evolve_between(&a, 0.4, 1.0).unwrap();
        let c = prop.evolve_between(&b, 1.0, 1.75).unwrap();
        let d = prop.evolve_between(&c, 1.75, 2.0).unwrap();
        assert!(d.distance(&direct).unwrap() < 1e-10);
    }

    #[test]
    fn ehrenfest_means_follow_the_kick_map() {
        // the kicked state carries |p| > 1.5, beyond the Nyquist momentum of 8192 points
        let grid = GridSpec::symmetric(8.0, 32768).unwrap();
        let hbar = 0.0008;
        let m = HamiltonianModel::kicked_harmonic(2.0).unwrap();
        let prop = KickedPropagator::new(&m, grid, hbar, HarmonicScheme::ExactShear).unwrap();
        let z = PhasePoint::new(0.3, 0.7);
        let psi = ground(grid, hbar, z.p, z.q);
        for &t in &[0.5, 1.0, 1.5, 2.0] {
            let state = prop.evolve_between(&psi, 0.0, t).unwrap();
            let cl = flow(&m, z, t, DEFAULT_DT_MAX).unwrap().end_point;
            let tol = 10.0 * hbar.sqrt();
            assert!((state.mean_position() - cl.q).abs() < tol, "t={t}");
            assert!((state.mean_momentum() - cl.p).abs() < tol, "t={t}");
        }
    }

    #[test]
    fn kick_is_diagonal_and_unitary() {
        let grid = GridSpec::symmetric(4.0, 512).unwrap();
        let m = HamiltonianModel::kicked_harmonic(2.0).unwrap();
        let psi = ground(grid, 0.05, 0.0, 0.0);
        let out = apply_kick(&m, &psi);
        for (a, b) in out.values().iter().zip(psi.values()) {
            assert!((a.norm() - b.norm()).abs() < 1e-15);
        }
    }
}
