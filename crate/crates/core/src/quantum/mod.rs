//! Grid propagation of the Schrodinger equation, used as the reference
//! solution for every semiclassical comparison.

mod kicked;
mod split;

pub use kicked::{apply_kick, kho_step, HarmonicScheme, KickedPropagator};
pub use split::{
    momentum_propagate, quadratic_propagate, split_operator_step, PropagationConfig, QuadraticPropagator,
    SplitOperator,
};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::models::HamiltonianModel;
use crate::phase_space::{GridSpec, WaveFunction};

/// `|<exact|method>| / (|exact| |method|)` for each pair.
pub fn fidelity_series(method_states: &[WaveFunction], exact_states: &[WaveFunction]) -> Result<Vec<f64>> {
    if method_states.len() != exact_states.len() {
        return Err(Error::IncompatibleGrid(format!(
            "{} method states against {} exact states",
            method_states.len(),
            exact_states.len()
        )));
    }
    method_states
        .iter()
        .zip(exact_states)
        .map(|(m, e)| e.fidelity(m))
        .collect()
}

/// Propagates `psi` from time 0 to `t` with the most accurate scheme the
/// model allows: exact shears for quadratic and kicked models, a single
/// momentum multiplier for `h(p)`, converged
/// Strang splitting otherwise.
pub fn exact_propagate(model: &HamiltonianModel, psi: &WaveFunction, t: f64) -> Result<WaveFunction> {
    exact_propagate_between(model, psi, 0.0, t)
}

pub fn exact_propagate_between(
    model: &HamiltonianModel,
    psi: &WaveFunction,
    t0: f64,
    t1: f64,
) -> Result<WaveFunction> {
    match model {
        HamiltonianModel::KickedHarmonic { .. } => {
            KickedPropagator::new(model, *psi.grid(), psi.hbar(), HarmonicScheme::ExactShear)?
                .evolve_between(psi, t0, t1)
        }
        m if m.quadratic_coefficient().is_some() => quadratic_propagate(m, psi, t1 - t0),
        m @ HamiltonianModel::IntegrableMomentum(_) => split::momentum_propagate(m, psi, t1 - t0),
        m => split::converged_split(m, psi, t1 - t0, 1e-9),
    }
}

/// Settings for [`resolve_grid`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSearch {
    /// Largest acceptable mass in the outer 5% of position and momentum space.
    pub edge_tol: f64,
    pub max_points: usize,
}

impl Default for GridSearch {
    fn default() -> Self {
        Self {
            edge_tol: 1e-12,
            max_points: 1 << 18,
        }
    }
}

/// Grows `grid` (more points, or a wider interval) until every state returned
/// by `run` keeps its mass away from the position and momentum edges.
pub fn resolve_grid<F>(start: GridSpec, search: GridSearch, mut run: F) -> Result<(GridSpec, Vec<WaveFunction>)>
where
    F: FnMut(GridSpec) -> Result<Vec<WaveFunction>>,
{
    let mut grid = start;
    loop {
        let states = run(grid)?;
        let x_edge = states.iter().map(|s| s.boundary_mass(0.05)).fold(0.0, f64::max);
        let p_edge = states
            .iter()
            .map(|s| s.momentum_boundary_mass(0.95) * s.norm_sqr())
            .fold(0.0, f64::max);
        if x_edge <= search.edge_tol && p_edge <= search.edge_tol {
            return Ok((grid, states));
        }
        // wrapping in either space pollutes the other, so a doubly dirty
        // grid is both widened and refined
        let next = match (x_edge > search.edge_tol, p_edge > search.edge_tol) {
            (true, true) => grid.widened().refined(),
            (true, false) => grid.widened(),
            _ => grid.refined(),
        };
        if next.n_points() > search.max_points {
            return Err(Error::BoundaryMass {
                mass: x_edge.max(p_edge),
            });
        }
        grid = next;
    }
}

pub(crate) fn phase(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta)
}
