use serde::{Deserialize, Serialize};

use super::flow::{flow, DEFAULT_DT_MAX};
use crate::error::{Error, Result};
use crate::models::{HamiltonianModel, QuadraticPhase};
use crate::phase_space::{PhasePoint, TangentMatrix};

/// `omega(u, v) = u_p v_q - u_q v_p` on `(dp, dq)` vectors.
pub fn symplectic_form(u: (f64, f64), v: (f64, f64)) -> f64 {
    u.0 * v.1 - u.1 * v.0
}

/// A line through `base` with unit direction `(dp, dq)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagrangianLine {
    pub base: PhasePoint,
    pub direction: (f64, f64),
}

impl LagrangianLine {
    pub fn new(base: PhasePoint, dp: f64, dq: f64) -> Result<Self> {
        let n = dp.hypot(dq);
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::Degenerate(format!("direction ({dp}, {dq})")));
        }
        // fix the sign so that equal lines compare equal
        let s = if dq < 0.0 || (dq == 0.0 && dp < 0.0) { -1.0 } else { 1.0 };
        Ok(Self {
            base,
            direction: (s * dp / n, s * dq / n),
        })
    }

    /// The line `dp = slope dq`.
    pub fn with_slope(base: PhasePoint, slope: f64) -> Result<Self> {
        Self::new(base, slope, 1.0)
    }

    /// The momentum direction `{dq = 0}`.
    pub fn vertical(base: PhasePoint) -> Self {
        Self {
            base,
            direction: (1.0, 0.0),
        }
    }

    pub fn horizontal(base: PhasePoint) -> Self {
        Self {
            base,
            direction: (0.0, 1.0),
        }
    }

    /// `dp/dq`; infinite for the vertical.
    pub fn slope(&self) -> f64 {
        self.direction.0 / self.direction.1
    }

    /// `|sin|` of the angle between two lines.
    pub fn transversality(&self, other: &Self) -> f64 {
        symplectic_form(self.direction, other.direction).abs()
    }

    pub fn image(&self, m: &TangentMatrix, base: PhasePoint) -> Result<Self> {
        let (dp, dq) = m.apply(self.direction.0, self.direction.1);
        Self::new(base, dp, dq)
    }
}

const PARALLEL_TOL: f64 = 1e-12;

/// The symplectic shear that fixes `l1` pointwise and maps `l2` onto `l`.
///
/// With `e1, e2, d` spanning `l1, l2, l` the map is
/// `v -> v + beta / omega(e1, e2) * omega(e1, v) e1`, `beta = omega(d, e2) / omega(e1, d)`.
pub fn shear_from_lagrangians(
    l1: &LagrangianLine,
    l2: &LagrangianLine,
    l: &LagrangianLine,
) -> Result<TangentMatrix> {
    let (e1, e2, d) = (l1.direction, l2.direction, l.direction);
    let w12 = symplectic_form(e1, e2);
    let w1d = symplectic_form(e1, d);
    if w12.abs() < PARALLEL_TOL {
        return Err(Error::Degenerate("l1 and l2 are parallel".into()));
    }
    if w1d.abs() < PARALLEL_TOL {
        return Err(Error::Degenerate("l and l1 are parallel".into()));
    }
    let k = symplectic_form(d, e2) / w1d / w12;
    // omega(e1, v) = -e1_q v_p + e1_p v_q
    Ok(TangentMatrix::new(
        1.0 - k * e1.0 * e1.1,
        k * e1.0 * e1.0,
        -k * e1.1 * e1.1,
        1.0 + k * e1.1 * e1.0,
    ))
}

/// `(dPhi^t)^{-1}` applied to the vertical at `Phi^t(base)`.
pub fn pulled_back_vertical(model: &HamiltonianModel, base: PhasePoint, t: f64) -> Result<LagrangianLine> {
    let f = flow(model, base, t, DEFAULT_DT_MAX)?;
    let (dp, dq) = f.tangent.inverse().apply(1.0, 0.0);
    LagrangianLine::new(base, dp, dq)
}

/// `P(t) = (dPhi_1^t)^{-1} dPhi^t`, where `dPhi_1^t` agrees with `dPhi^t` on
/// the tangent of the initial manifold and preserves verticals. `P` fixes that
/// tangent and sends the pulled-back vertical to the vertical.
pub fn shear_p_pq(
    model: &HamiltonianModel,
    phase0: QuadraticPhase,
    base: PhasePoint,
    t: f64,
) -> Result<TangentMatrix> {
    let on_manifold = (phase0.momentum(base.q) - base.p).abs() <= 1e-9 * (1.0 + base.p.abs());
    if !on_manifold {
        return Err(Error::InvalidParameter(format!(
            "{base:?} is not on the initial manifold"
        )));
    }
    let tangent = LagrangianLine::with_slope(base, phase0.alpha)?;
    let pulled = pulled_back_vertical(model, base, t)?;
    let vertical = LagrangianLine::vertical(base);
    if pulled.transversality(&vertical) < PARALLEL_TOL {
        return Ok(TangentMatrix::identity());
    }
    shear_from_lagrangians(&tangent, &pulled, &vertical)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn o() -> PhasePoint {
        PhasePoint::default()
    }

    #[test]
    fn reference_configuration() {
        let l1 = LagrangianLine::horizontal(o());
        let l2 = LagrangianLine::vertical(o());
        let l = LagrangianLine::with_slope(o(), 2.0).unwrap();
        let t = shear_from_lagrangians(&l1, &l2, &l).unwrap();
        // q' = q + p/2: in (q, p) coordinates [[1, 1/2], [0, 1]]
        let m = t.to_qp_order();
        let expect = [[1.0, 0.5], [0.0, 1.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((m[i][j] - expect[i][j]).abs() < 1e-15);
            }
        }
        assert_eq!(shear_from_lagrangians(&l1, &l2, &l2).unwrap(), TangentMatrix::identity());
        assert!(matches!(
            shear_from_lagrangians(&l2, &l2, &l),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(
            shear_from_lagrangians(&l1, &l2, &l1),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn pulled_back_verticals() {
        // barrier, unstable initial manifold: pull-back tends to the stable line
        let b = HamiltonianModel::barrier(1.0).unwrap();
        let v = pulled_back_vertical(&b, o(), 8.0).unwrap();
        assert!((v.slope() + 1.0).abs() < 1e-6);
        let p = shear_p_pq(&b, QuadraticPhase::new(0.0, 0.0, 1.0), o(), 5.0).unwrap();
        let (dp, dq) = p.apply(1.0, 1.0);
        assert!((dp - 1.0).abs() < 1e-12 && (dq - 1.0).abs() < 1e-12);
        assert!((p.det() - 1.0).abs() < 1e-12);
        // free particle: pull-back tends to the horizontal
        let f = HamiltonianModel::free();
        let v = pulled_back_vertical(&f, PhasePoint::new(1.0, 0.0), 1e4).unwrap();
        assert!(v.slope().abs() < 1e-3);
        assert_eq!(
            shear_p_pq(&f, QuadraticPhase::new(1.0, 0.0, 1.0), PhasePoint::new(1.0, 0.0), 0.0).unwrap(),
            TangentMatrix::identity()
        );
    }

    #[test]
    fn shear_rejects_vertical_manifold_and_off_manifold_base() {
        let b = HamiltonianModel::barrier(1.0).unwrap();
        let ph = QuadraticPhase::new(0.0, 0.0, 1.0);
        assert!(shear_p_pq(&b, ph, PhasePoint::new(0.5, 0.0), 1.0).is_err());
    }

    #[test]
    fn barrier_shear_converges_geometrically() {
        let b = HamiltonianModel::barrier(1.0).unwrap();
        let ph = QuadraticPhase::new(0.0, 0.0, 1.0);
        let ps: Vec<_> = (2..=6)
            .map(|t| shear_p_pq(&b, ph, o(), t as f64).unwrap())
            .collect();
        let gaps: Vec<f64> = ps.windows(2).map(|w| w[1].sub(&w[0]).frobenius()).collect();
        for w in gaps.windows(2) {
            assert!(w[1] < w[0]);
            // ratio e^{-2 lambda}
            assert!((w[1] / w[0] - (-2.0f64).exp()).abs() < 1e-3);
        }
    }
}
