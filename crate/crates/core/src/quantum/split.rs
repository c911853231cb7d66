use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::phase;
use crate::error::{Error, Result};
use crate::models::HamiltonianModel;
use crate::phase_space::{GridSpec, SpectralPlan, WaveFunction};

/// Time step and grid of a split-operator run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationConfig {
    pub dt: f64,
    pub grid: GridSpec,
    pub hbar: f64,
}

impl PropagationConfig {
    /// Rejects steps whose phase factors alias: the phase of either multiplier
    /// may not advance by `pi` or more between neighbouring grid points.
    pub fn check_aliasing(&self, model: &HamiltonianModel) -> Result<()> {
        let g = self.grid;
        let mut worst_v: f64 = 0.0;
        let mut prev = model.potential_energy(g.x_min());
        for x in g.points().skip(1) {
            let v = model.potential_energy(x);
            worst_v = worst_v.max((v - prev).abs());
            prev = v;
        }
        let xi = g.momenta_fft_order(self.hbar);
        let mut sorted = xi.clone();
        sorted.sort_by(f64::total_cmp);
        let worst_t = sorted
            .windows(2)
            .map(|w| (model.kinetic(w[1]) - model.kinetic(w[0])).abs())
            .fold(0.0, f64::max);
        let dv = 0.5 * self.dt.abs() * worst_v / self.hbar;
        let dk = self.dt.abs() * worst_t / self.hbar;
        if dv >= PI || dk >= PI {
            return Err(Error::StepTooLarge(format!(
                "dt = {} advances the phase by {:.3} (potential) / {:.3} (kinetic) between grid neighbours",
                self.dt,
                dv,
                dk
            )));
        }
        Ok(())
    }
}

/// Strang splitting `e^{-iV dt/2hbar} e^{-iT dt/hbar} e^{-iV dt/2hbar}` with
/// precomputed multipliers.
#[derive(Debug, Clone)]
pub struct SplitOperator {
    plan: SpectralPlan,
    half_potential: Vec<Complex64>,
    kinetic: Vec<Complex64>,
    config: PropagationConfig,
}

impl SplitOperator {
    pub fn new(model: &HamiltonianModel, config: PropagationConfig) -> Result<Self> {
        if model.is_kicked() {
            return Err(Error::Unsupported(
                "the kicked model is propagated by KickedPropagator".into(),
            ));
        }
        config.check_aliasing(model)?;
        let PropagationConfig { dt, grid, hbar } = config;
        let plan = SpectralPlan::new(grid, hbar);
        let half_potential = grid
            .points()
            .map(|x| phase(-0.5 * dt * model.potential_energy(x) / hbar))
            .collect();
        let kinetic = plan.multiplier(|xi| phase(-dt * model.kinetic(xi) / hbar));
        Ok(Self {
            plan,
            half_potential,
            kinetic,
            config,
        })
    }

    pub fn config(&self) -> PropagationConfig {
        self.config
    }

    pub fn step_in_place(&self, values: &mut [Complex64]) {
        for (v, m) in values.iter_mut().zip(&self.half_potential) {
            *v *= m;
        }
        self.plan.apply_multiplier(values, &self.kinetic);
        for (v, m) in values.iter_mut().zip(&self.half_potential) {
            *v *= m;
        }
    }

    pub fn run(&self, psi: &WaveFunction, steps: usize) -> Result<WaveFunction> {
        let mut values = psi.values().to_vec();
        for _ in 0..steps {
            self.step_in_place(&mut values);
        }
        psi.with_values(values)
    }
}

/// One Strang step of length `dt`.
pub fn split_operator_step(model: &HamiltonianModel, psi: &WaveFunction, dt: f64) -> Result<WaveFunction> {
    let op = SplitOperator::new(
        model,
        PropagationConfig {
            dt,
            grid: *psi.grid(),
            hbar: psi.hbar(),
        },
    )?;
    op.run(psi, 1)
}

/// Halves the Strang step until the state at `t` moves by less than `tol`.
pub(crate) fn converged_split(model: &HamiltonianModel, psi: &WaveFunction, t: f64, tol: f64) -> Result<WaveFunction> {
    if t == 0.0 {
        return Ok(psi.clone());
    }
    let mut steps = (t.abs() / 0.01).ceil().max(1.0) as usize;
    let config = |steps: usize| PropagationConfig {
        dt: t / steps as f64,
        grid: *psi.grid(),
        hbar: psi.hbar(),
    };
    let mut prev = SplitOperator::new(model, config(steps))?.run(psi, steps)?;
    loop {
        steps *= 2;
        let next = SplitOperator::new(model, config(steps))?.run(psi, steps)?;
        let change = next.distance(&prev)?;
        if change < tol {
            return Ok(next);
        }
        if steps > 1 << 22 {
            return Err(Error::Integration(format!(
                "split-operator run did not converge (last change {change:e})"
            )));
        }
        prev = next;
    }
}

/// `e^{-i tau (p^2/2 + c q^2/2)/hbar}` written as a position chirp, a
/// momentum chirp and a second position chirp. The factorisation is exact
/// (phase included) as long as `sqrt(c) tau < pi`; longer harmonic steps are
/// split.
#[derive(Debug, Clone)]
pub struct QuadraticPropagator {
    plan: SpectralPlan,
    chirp: Vec<Complex64>,
    kinetic: Vec<Complex64>,
}

impl QuadraticPropagator {
    pub fn new(c: f64, tau: f64, grid: GridSpec, hbar: f64) -> Result<Self> {
        let (a, b) = if c > 0.0 {
            let w = c.sqrt();
            if (w * tau).abs() >= PI {
                return Err(Error::InvalidParameter(format!(
                    "harmonic segment of phase {} exceeds pi",
                    w * tau
                )));
            }
            (w * (0.5 * w * tau).tan(), (w * tau).sin() / w)
        } else if c < 0.0 {
            let l = (-c).sqrt();
            (-l * (0.5 * l * tau).tanh(), (l * tau).sinh() / l)
        } else {
            (0.0, tau)
        };
        let plan = SpectralPlan::new(grid, hbar);
        let chirp = grid.points().map(|x| phase(-0.5 * a * x * x / hbar)).collect();
        let kinetic = plan.multiplier(|xi| phase(-0.5 * b * xi * xi / hbar));
        Ok(Self { plan, chirp, kinetic })
    }

    pub fn apply_in_place(&self, values: &mut [Complex64]) {
        for (v, m) in values.iter_mut().zip(&self.chirp) {
            *v *= m;
        }
        self.plan.apply_multiplier(values, &self.kinetic);
        for (v, m) in values.iter_mut().zip(&self.chirp) {
            *v *= m;
        }
    }
}

/// Exact propagation under a quadratic model for time `t`.
pub fn quadratic_propagate(model: &HamiltonianModel, psi: &WaveFunction, t: f64) -> Result<WaveFunction> {
    let c = model.quadratic_coefficient().ok_or_else(|| {
        Error::Unsupported(format!("model '{}' is not quadratic", model.name()))
    })?;
    if t == 0.0 {
        return Ok(psi.clone());
    }
    let pieces = if c > 0.0 {
        (c.sqrt() * t.abs() / 3.0).ceil().max(1.0) as usize
    } else {
        1
    };
    let prop = QuadraticPropagator::new(c, t / pieces as f64, *psi.grid(), psi.hbar())?;
    let mut values = psi.values().to_vec();
    for _ in 0..pieces {
        prop.apply_in_place(&mut values);
    }
    psi.with_values(values)
}

/// `e^{-i t h(p) / hbar}` applied in momentum space; exact for models
/// without a potential.
pub fn momentum_propagate(model: &HamiltonianModel, psi: &WaveFunction, t: f64) -> Result<WaveFunction> {
    if !matches!(model, HamiltonianModel::FreeParticle | HamiltonianModel::IntegrableMomentum(_)) {
        return Err(Error::Unsupported(format!("model '{}' has a potential", model.name())));
    }
    let plan = SpectralPlan::new(*psi.grid(), psi.hbar());
    let hbar = psi.hbar();
    let mult = plan.multiplier(|xi| phase(-t * model.kinetic(xi) / hbar));
    let mut values = psi.values().to_vec();
    plan.apply_multiplier(&mut values, &mult);
    psi.with_values(values)
}
