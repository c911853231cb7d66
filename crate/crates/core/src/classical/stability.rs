use serde::{Deserialize, Serialize};

use super::flow::{flow, DEFAULT_DT_MAX};
use super::lines::LagrangianLine;
use crate::error::{Error, Result};
use crate::models::HamiltonianModel;
use crate::phase_space::{PhasePoint, TangentMatrix};

/// Eigen-data of the period map at a hyperbolic fixed point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicSplitting {
    pub lyapunov: f64,
    /// Eigenvalue of largest modulus (its sign records reflection).
    pub multiplier: f64,
    pub stable: LagrangianLine,
    pub unstable: LagrangianLine,
    pub period_map: TangentMatrix,
}

const FIXED_POINT_TOL: f64 = 1e-8;

fn period_map(model: &HamiltonianModel, fixed_point: PhasePoint, period: f64) -> Result<TangentMatrix> {
    let f = flow(model, fixed_point, period, DEFAULT_DT_MAX)?;
    let displacement = f.end_point.distance(&fixed_point);
    if displacement > FIXED_POINT_TOL {
        return Err(Error::NotFixedPoint { displacement });
    }
    Ok(f.tangent)
}

/// Eigenvector of a 2x2 matrix for eigenvalue `mu`, taken from the better
/// conditioned row of `M - mu I`.
fn eigenvector(m: &TangentMatrix, mu: f64) -> (f64, f64) {
    let r1 = (m.pq(), mu - m.pp());
    let r2 = (mu - m.qq(), m.qp());
    if r1.0.hypot(r1.1) >= r2.0.hypot(r2.1) {
        r1
    } else {
        r2
    }
}

/// Splits the tangent plane at a hyperbolic fixed point of the period map.
pub fn hyperbolic_splitting(
    model: &HamiltonianModel,
    fixed_point: PhasePoint,
    period: f64,
) -> Result<HyperbolicSplitting> {
    let m = period_map(model, fixed_point, period)?;
    let trace = m.trace();
    if trace.abs() <= 2.0 + 1e-12 {
        return Err(Error::NotHyperbolic { trace });
    }
    let root = (trace * trace - 4.0).sqrt();
    let big = 0.5 * (trace.abs() + root) * trace.signum();
    let small = 1.0 / big;
    let (up, uq) = eigenvector(&m, big);
    let (sp, sq) = eigenvector(&m, small);
    Ok(HyperbolicSplitting {
        lyapunov: big.abs().ln() / period,
        multiplier: big,
        stable: LagrangianLine::new(fixed_point, sp, sq)?,
        unstable: LagrangianLine::new(fixed_point, up, uq)?,
        period_map: m,
    })
}

/// Exponent per unit time, `ln |mu_max| / period`.
pub fn lyapunov_exponent(model: &HamiltonianModel, fixed_point: PhasePoint, period: f64) -> Result<f64> {
    Ok(hyperbolic_splitting(model, fixed_point, period)?.lyapunov)
}

/// `(stable, unstable)` eigendirections of the period map.
pub fn hyperbolic_subspaces(
    model: &HamiltonianModel,
    fixed_point: PhasePoint,
    period: f64,
) -> Result<(LagrangianLine, LagrangianLine)> {
    let s = hyperbolic_splitting(model, fixed_point, period)?;
    Ok((s.stable, s.unstable))
}

/// `ln(1/hbar) / (2 lambda)`.
pub fn ehrenfest_time(lambda_exp: f64, hbar: f64) -> f64 {
    (1.0 / hbar).ln() / (2.0 * lambda_exp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Potential;

    #[test]
    fn barrier_exponent_and_subspaces() {
        let b = HamiltonianModel::barrier(4.0).unwrap();
        assert!((lyapunov_exponent(&b, PhasePoint::default(), 1.0).unwrap() - 2.0).abs() < 1e-12);
        let (s, u) = hyperbolic_subspaces(&b, PhasePoint::default(), 1.0).unwrap();
        assert!((s.slope() + 2.0).abs() < 1e-12);
        assert!((u.slope() - 2.0).abs() < 1e-12);
        let b1 = HamiltonianModel::barrier(1.0).unwrap();
        let (s, u) = hyperbolic_subspaces(&b1, PhasePoint::default(), 1.0).unwrap();
        assert!((s.slope() + 1.0).abs() < 1e-12);
        assert!((u.slope() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn harmonic_well_is_not_hyperbolic() {
        let h = HamiltonianModel::potential(Potential::harmonic());
        assert!(matches!(
            lyapunov_exponent(&h, PhasePoint::default(), 1.0),
            Err(Error::NotHyperbolic { .. })
        ));
        let b = HamiltonianModel::barrier(1.0).unwrap();
        assert!(matches!(
            lyapunov_exponent(&b, PhasePoint::new(0.1, 0.0), 1.0),
            Err(Error::NotFixedPoint { .. })
        ));
    }

    #[test]
    fn kho_eigendirections_are_invariant() {
        let k = HamiltonianModel::kicked_harmonic(2.0).unwrap();
        let s = hyperbolic_splitting(&k, PhasePoint::default(), 1.0).unwrap();
        for line in [s.stable, s.unstable] {
            let (dp, dq) = s.period_map.apply(line.direction.0, line.direction.1);
            let cross = dp * line.direction.1 - dq * line.direction.0;
            assert!(cross.abs() < 1e-9);
        }
        // trace of the kick-then-rotate period map is 2 cos 1 + K sin 1
        let trace = 2.0 * 1f64.cos() + 2.0 * 1f64.sin();
        assert!((s.period_map.trace() - trace).abs() < 1e-14);
    }

    #[test]
    fn ehrenfest_examples() {
        assert_eq!(ehrenfest_time(0.83, 1.0), 0.0);
        assert!((ehrenfest_time(0.5, (-1f64).exp()) - 1.0).abs() < 1e-15);
    }
}
