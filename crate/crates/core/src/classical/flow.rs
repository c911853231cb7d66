use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{analytic_flow, quadratic_flow, HamiltonianModel};
use crate::phase_space::{PhasePoint, TangentMatrix};

/// End point, tangent map and action of a trajectory segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowResult {
    pub end_point: PhasePoint,
    pub tangent: TangentMatrix,
    /// `int (p qdot - H) dt`, kicks included.
    pub action: f64,
}

impl FlowResult {
    pub fn identity(start: PhasePoint) -> Self {
        Self {
            end_point: start,
            tangent: TangentMatrix::identity(),
            action: 0.0,
        }
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &FlowResult) -> FlowResult {
        FlowResult {
            end_point: next.end_point,
            tangent: next.tangent * self.tangent,
            action: self.action + next.action,
        }
    }
}

pub const DEFAULT_DT_MAX: f64 = 1e-3;
const REFINE_TOL: f64 = 1e-10;
const MIN_DT: f64 = 1e-7;

/// `Phi^t(start)` from time 0.
pub fn flow(model: &HamiltonianModel, start: PhasePoint, t: f64, dt_max: f64) -> Result<FlowResult> {
    flow_between(model, start, 0.0, t, dt_max)
}

/// Flow from `t0` to `t1`. For the kicked model, states at integer times are
/// taken just before the kick, so the kicks at integers in `[t0, t1)` are
/// applied on the way (undone in reverse order when `t1 < t0`).
pub fn flow_between(
    model: &HamiltonianModel,
    start: PhasePoint,
    t0: f64,
    t1: f64,
    dt_max: f64,
) -> Result<FlowResult> {
    if !start.is_finite() || !t0.is_finite() || !t1.is_finite() {
        return Err(Error::InvalidParameter("non-finite flow input".into()));
    }
    if t0 == t1 {
        return Ok(FlowResult::identity(start));
    }
    if let HamiltonianModel::KickedHarmonic { .. } = model {
        return Ok(kicked_flow(model, start, t0, t1));
    }
    if let Some((end_point, tangent, action)) = analytic_flow(model, start, t1 - t0) {
        return Ok(FlowResult {
            end_point,
            tangent,
            action,
        });
    }
    integrate(model, start, t1 - t0, dt_max)
}

/// Kick `p -> p + K sin q` with its tangent map and action `-K cos q`.
pub fn kick(model: &HamiltonianModel, z: PhasePoint) -> FlowResult {
    let HamiltonianModel::KickedHarmonic { k } = model else {
        return FlowResult::identity(z);
    };
    FlowResult {
        end_point: PhasePoint::new(z.p + k * z.q.sin(), z.q),
        tangent: TangentMatrix::new(1.0, k * z.q.cos(), 0.0, 1.0),
        action: -k * z.q.cos(),
    }
}

fn inverse_kick(model: &HamiltonianModel, z: PhasePoint) -> FlowResult {
    let HamiltonianModel::KickedHarmonic { k } = model else {
        return FlowResult::identity(z);
    };
    FlowResult {
        end_point: PhasePoint::new(z.p - k * z.q.sin(), z.q),
        tangent: TangentMatrix::new(1.0, -k * z.q.cos(), 0.0, 1.0),
        action: k * z.q.cos(),
    }
}

fn rotate(z: PhasePoint, tau: f64) -> FlowResult {
    let (end_point, tangent, action) = quadratic_flow(1.0, z, tau);
    FlowResult {
        end_point,
        tangent,
        action,
    }
}

fn kicked_flow(model: &HamiltonianModel, start: PhasePoint, t0: f64, t1: f64) -> FlowResult {
    let mut acc = FlowResult::identity(start);
    let mut t = t0;
    if t1 > t0 {
        while t < t1 {
            if t == t.floor() {
                acc = acc.then(&kick(model, acc.end_point));
            }
            let next = (t.floor() + 1.0).min(t1);
            acc = acc.then(&rotate(acc.end_point, next - t));
            t = next;
        }
    } else {
        while t > t1 {
            let prev = if t == t.floor() { t - 1.0 } else { t.floor() }.max(t1);
            acc = acc.then(&rotate(acc.end_point, prev - t));
            t = prev;
            if t == t.floor() {
                acc = acc.then(&inverse_kick(model, acc.end_point));
            }
        }
    }
    acc
}

// Fourth-order position-extended Forest-Ruth-like coefficients (Omelyan et al.).
const XI: f64 = 0.178_617_895_844_809_1;
const LAMBDA: f64 = -0.212_341_831_062_605_4;
const CHI: f64 = -0.066_264_582_669_818_49;

fn integrate(model: &HamiltonianModel, start: PhasePoint, t: f64, dt_max: f64) -> Result<FlowResult> {
    let mut dt = dt_max.abs().max(1e-12);
    let mut prev = pefrl(model, start, t, dt);
    loop {
        dt *= 0.5;
        if dt < MIN_DT {
            return Err(Error::Integration(format!(
                "no convergence from {start:?} over t = {t} with dt >= {MIN_DT}"
            )));
        }
        let next = pefrl(model, start, t, dt);
        let change = next.end_point.distance(&prev.end_point).max((next.action - prev.action).abs());
        if !change.is_finite() {
            return Err(Error::Integration(format!("trajectory from {start:?} diverged")));
        }
        if change < REFINE_TOL * (1.0 + next.end_point.p.abs() + next.end_point.q.abs()) {
            return Ok(next);
        }
        prev = next;
    }
}

/// Fixed-step symplectic integration with the variational equations carried
/// through every stage.
fn pefrl(model: &HamiltonianModel, start: PhasePoint, t: f64, dt_max: f64) -> FlowResult {
    let n = (t.abs() / dt_max).ceil().max(1.0) as usize;
    let h = t / n as f64;
    let (mut p, mut q) = (start.p, start.q);
    // rows of the tangent map: dp = (a, b), dq = (c, d) against (dp0, dq0)
    let mut m = [[1.0, 0.0], [0.0, 1.0]];
    let mut action = 0.0;

    let drift = |p: f64, q: &mut f64, m: &mut [[f64; 2]; 2], tau: f64, action: &mut f64| {
        let v = model.kinetic_d1(p);
        let w = model.kinetic_d2(p);
        *q += tau * v;
        for j in 0..2 {
            m[1][j] += tau * w * m[0][j];
        }
        *action += tau * (p * v - model.kinetic(p));
    };
    let kickv = |p: &mut f64, q: f64, m: &mut [[f64; 2]; 2], tau: f64, action: &mut f64| {
        let f = model.potential_d1(q);
        let g = model.potential_d2(q);
        *p -= tau * f;
        for j in 0..2 {
            m[0][j] -= tau * g * m[1][j];
        }
        *action -= tau * model.potential_energy(q);
    };

    for _ in 0..n {
        drift(p, &mut q, &mut m, XI * h, &mut action);
        kickv(&mut p, q, &mut m, 0.5 * (1.0 - 2.0 * LAMBDA) * h, &mut action);
        drift(p, &mut q, &mut m, CHI * h, &mut action);
        kickv(&mut p, q, &mut m, LAMBDA * h, &mut action);
        drift(p, &mut q, &mut m, (1.0 - 2.0 * (CHI + XI)) * h, &mut action);
        kickv(&mut p, q, &mut m, LAMBDA * h, &mut action);
        drift(p, &mut q, &mut m, CHI * h, &mut action);
        kickv(&mut p, q, &mut m, 0.5 * (1.0 - 2.0 * LAMBDA) * h, &mut action);
        drift(p, &mut q, &mut m, XI * h, &mut action);
    }
    FlowResult {
        end_point: PhasePoint::new(p, q),
        tangent: TangentMatrix(m),
        action,
    }
}
