use std::f64::consts::PI;

use num_complex::Complex64;

use crate::classical::{flow_between, FlowResult, DEFAULT_DT_MAX};
use crate::error::{Error, Result};
use crate::models::HamiltonianModel;
use crate::phase_space::{GridSpec, PhasePoint, WaveFunction};

/// A Gaussian carried by one trajectory and its tangent map.
#[derive(Debug, Clone)]
pub struct ThawedState {
    pub psi: WaveFunction,
    pub center: PhasePoint,
    pub b_t: Complex64,
    pub action: f64,
    /// `sqrt(hbar) |dPhi^t|`; values near 1 mark the breakdown of the ansatz.
    pub indicator: f64,
    /// Continuous argument of `S_qq + S_qp b0` at each sampled time.
    pub branch_log: Vec<(f64, f64)>,
}

const BRANCH_DT: f64 = 0.01;

/// Propagates `(Im b0 / pi hbar)^{1/4} e^{i [p0 (x - q0) + b0 (x - q0)^2 / 2] / hbar}`.
pub fn propagate_thawed_gaussian(
    model: &HamiltonianModel,
    z0: PhasePoint,
    b0: Complex64,
    hbar: f64,
    t: f64,
    grid: GridSpec,
) -> Result<ThawedState> {
    if !(b0.im > 0.0) {
        return Err(Error::InvalidParameter(format!("width needs Im b0 > 0, got {b0}")));
    }
    if t < 0.0 {
        return Err(Error::InvalidParameter("thawed propagation runs forward only".into()));
    }
    let mut acc = FlowResult::identity(z0);
    let mut s = 0.0;
    let mut arg: f64 = 0.0;
    let mut branch_log = vec![(0.0, 0.0)];
    while s < t {
        let next = (s + BRANCH_DT).min(t);
        acc = acc.then(&flow_between(model, acc.end_point, s, next, DEFAULT_DT_MAX)?);
        s = next;
        let den = Complex64::new(acc.tangent.qq(), 0.0) + acc.tangent.qp() * b0;
        let mut step = den.arg() - arg.rem_euclid(2.0 * PI);
        step -= (step / (2.0 * PI)).round() * 2.0 * PI;
        if step.abs() > 0.5 * PI {
            return Err(Error::Branch { t: s });
        }
        arg += step;
        branch_log.push((s, arg));
    }
    let m = acc.tangent;
    let den = Complex64::new(m.qq(), 0.0) + m.qp() * b0;
    let b_t = (Complex64::new(m.pq(), 0.0) + m.pp() * b0) / den;
    let pref = (b0.im / (PI * hbar)).powf(0.25) * den.norm().powf(-0.5) * Complex64::from_polar(1.0, -0.5 * arg);
    let c = acc.end_point;
    let global = pref * Complex64::from_polar(1.0, acc.action / hbar);
    let psi = WaveFunction::from_fn(grid, hbar, |x| {
        let d = x - c.q;
        global * (Complex64::i() / hbar * (c.p * d + 0.5 * b_t * d * d)).exp()
    });
    Ok(ThawedState {
        psi,
        center: c,
        b_t,
        action: acc.action,
        indicator: hbar.sqrt() * m.spectral_norm(),
        branch_log,
    })
}
