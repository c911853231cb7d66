//! Closed-form flows, phases, transport maps and kernels for the models that
//! admit them: quadratic Hamiltonians `p^2/2 + c q^2/2` (free particle,
//! barrier, harmonic well) and momentum-only Hamiltonians `h(p)`.

use super::{HamiltonianModel, QuadraticPhase};
use crate::error::{Error, Result};
use crate::phase_space::{PhasePoint, TangentMatrix};

/// Flow of a quadratic Hamiltonian `p^2/2 + c q^2/2` for time `t`.
///
/// Returns the end point, the tangent map and the action
/// `int (p qdot - H) dt = (p(t) q(t) - p q) / 2`.
pub(crate) fn quadratic_flow(c: f64, z: PhasePoint, t: f64) -> (PhasePoint, TangentMatrix, f64) {
    let m = if c > 0.0 {
        let w = c.sqrt();
        let (s, co) = (w * t).sin_cos();
        TangentMatrix::new(co, -w * s, s / w, co)
    } else if c < 0.0 {
        let l = (-c).sqrt();
        let (sh, ch) = ((l * t).sinh(), (l * t).cosh());
        TangentMatrix::new(ch, l * sh, sh / l, ch)
    } else {
        TangentMatrix::new(1.0, 0.0, t, 1.0)
    };
    let (p, q) = m.apply(z.p, z.q);
    let action = 0.5 * (p * q - z.p * z.q);
    (PhasePoint::new(p, q), m, action)
}

/// What [`analytic_oracle`] should evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleKind {
    Flow,
    Phase,
    TransportMap,
    MetaplecticKernel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleValue {
    Flow {
        end_point: PhasePoint,
        tangent: TangentMatrix,
        action: f64,
    },
    Phase(f64),
    TransportMap {
        phi: f64,
        dphi: f64,
        alpha_t: f64,
    },
    MetaplecticKernel(f64),
}

/// Dispatches to [`AnalyticOracle`].
///
/// `arg` is the start point's position on the initial manifold for `Flow`
/// and `TransportMap`, the evaluation point `y` for `Phase`, and ignored for
/// the kernel, which is always taken along the central trajectory.
pub fn analytic_oracle(
    model: &HamiltonianModel,
    phase0: QuadraticPhase,
    kind: OracleKind,
    t: f64,
    arg: f64,
) -> Result<OracleValue> {
    let o = AnalyticOracle::new(model, phase0)?;
    Ok(match kind {
        OracleKind::Flow => {
            let (end_point, tangent, action) = o.flow(phase0.point(arg), t)?;
            OracleValue::Flow {
                end_point,
                tangent,
                action,
            }
        }
        OracleKind::Phase => OracleValue::Phase(o.phase(t, arg)?),
        OracleKind::TransportMap => {
            let (phi, dphi) = o.transport_map(t, arg)?;
            OracleValue::TransportMap {
                phi,
                dphi,
                alpha_t: o.alpha_t(t, arg)?,
            }
        }
        OracleKind::MetaplecticKernel => OracleValue::MetaplecticKernel(o.kernel(t)?),
    })
}

/// Closed-form reference solutions for one model and initial manifold.
#[derive(Debug, Clone, Copy)]
pub struct AnalyticOracle<'a> {
    model: &'a HamiltonianModel,
    phase0: QuadraticPhase,
}

impl<'a> AnalyticOracle<'a> {
    pub fn new(model: &'a HamiltonianModel, phase0: QuadraticPhase) -> Result<Self> {
        match model {
            HamiltonianModel::FreeParticle
            | HamiltonianModel::IntegrableMomentum(_)
            | HamiltonianModel::ParabolicBarrier { .. } => {}
            HamiltonianModel::StandardPotential(v) if v.quadratic_coefficient().is_some() => {}
            other => {
                return Err(Error::Unsupported(format!(
                    "no closed-form solution for model '{}'",
                    other.name()
                )))
            }
        }
        Ok(Self { model, phase0 })
    }

    pub fn phase0(&self) -> QuadraticPhase {
        self.phase0
    }

    /// `Phi^t(z)` with its tangent map and action.
    pub fn flow(&self, z: PhasePoint, t: f64) -> Result<(PhasePoint, TangentMatrix, f64)> {
        Ok(analytic_flow(self.model, z, t).expect("constructor admits only solvable models"))
    }

    /// `(phi(t, x), phi'(t, x))`, failing once the manifold has folded.
    pub fn transport_map(&self, t: f64, x: f64) -> Result<(f64, f64)> {
        let (end, m, _) = self.flow(self.phase0.point(x), t)?;
        let dphi = m.qp() * self.phase0.alpha + m.qq();
        if !(dphi > 0.0) {
            return Err(Error::CausticDomain(format!(
                "phi'(t={t}, x={x}) = {dphi}: slope {} is past its caustic",
                self.phase0.alpha
            )));
        }
        Ok((end.q, dphi))
    }

    /// Slope `dp/dq` of the evolved manifold above the image of `x`.
    pub fn alpha_t(&self, t: f64, x: f64) -> Result<f64> {
        let (_, dphi) = self.transport_map(t, x)?;
        let (_, m, _) = self.flow(self.phase0.point(x), t)?;
        Ok((m.pp() * self.phase0.alpha + m.pq()) / dphi)
    }

    /// Inverse of `x -> phi(t, x)`.
    pub fn inverse_transport(&self, t: f64, y: f64) -> Result<f64> {
        let q0 = self.phase0.q0;
        let (c, dc) = self.transport_map(t, q0)?;
        if self.model.quadratic_coefficient().is_some() {
            return Ok(q0 + (y - c) / dc);
        }
        // momentum-only model: Newton on the increasing map, safeguarded by bisection
        let mut lo = q0;
        let mut hi = q0;
        let mut step = (y - c).abs() / dc + 1e-3;
        while self.transport_map(t, lo)?.0 > y {
            lo -= step;
            step *= 2.0;
        }
        step = (y - c).abs() / dc + 1e-3;
        while self.transport_map(t, hi)?.0 < y {
            hi += step;
            step *= 2.0;
        }
        let mut x = 0.5 * (lo + hi);
        for _ in 0..200 {
            let (f, df) = self.transport_map(t, x)?;
            let r = f - y;
            if r.abs() <= 1e-15 * (1.0 + y.abs()) {
                break;
            }
            if r > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let nx = x - r / df;
            x = if nx > lo && nx < hi { nx } else { 0.5 * (lo + hi) };
            if hi - lo < 1e-15 * (1.0 + x.abs()) {
                break;
            }
        }
        Ok(x)
    }

    /// Solution `S(t, y)` of the Hamilton-Jacobi equation with `S(0) = S0`.
    pub fn phase(&self, t: f64, y: f64) -> Result<f64> {
        let x = self.inverse_transport(t, y)?;
        if self.model.quadratic_coefficient().is_some() {
            // S(t, .) is quadratic: expand around the central trajectory
            let (center, _, action) = self.flow(self.phase0.center(), t)?;
            let a = self.alpha_t(t, self.phase0.q0)?;
            let d = y - center.q;
            return Ok(action + center.p * d + 0.5 * a * d * d);
        }
        let (_, _, action) = self.flow(self.phase0.point(x), t)?;
        Ok(self.phase0.s0(x) + action)
    }

    /// `A(t, q0) = H_pp / phi'(t, q0)^2` along the central trajectory.
    pub fn curvature(&self, t: f64) -> Result<f64> {
        let (_, dphi) = self.transport_map(t, self.phase0.q0)?;
        Ok(self.model.kinetic_d2(self.phase0.p0) / (dphi * dphi))
    }

    /// `C_t = int_0^t A(s, q0) ds`, which equals `(dPhi^t)_{qp} / phi'(t, q0)`.
    pub fn kernel(&self, t: f64) -> Result<f64> {
        let (_, dphi) = self.transport_map(t, self.phase0.q0)?;
        let (_, m, _) = self.flow(self.phase0.center(), t)?;
        Ok(m.qp() / dphi)
    }
}

/// Closed-form flow when one exists: quadratic and momentum-only models.
pub(crate) fn analytic_flow(
    model: &HamiltonianModel,
    z: PhasePoint,
    t: f64,
) -> Option<(PhasePoint, TangentMatrix, f64)> {
    match model {
        HamiltonianModel::IntegrableMomentum(h) => {
            let v = h.h1(z.p);
            let end = PhasePoint::new(z.p, z.q + t * v);
            let m = TangentMatrix::new(1.0, 0.0, t * h.h2(z.p), 1.0);
            Some((end, m, t * (z.p * v - h.h(z.p))))
        }
        HamiltonianModel::KickedHarmonic { .. } => None,
        other => other.quadratic_coefficient().map(|c| quadratic_flow(c, z, t)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Dispersion, Potential};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn free_particle_closed_forms() {
        let m = HamiltonianModel::free();
        let ph = QuadraticPhase::new(1.0, 0.0, 1.0);
        let o = AnalyticOracle::new(&m, ph).unwrap();
        for &x in &[-0.5, 0.0, 0.7] {
            let (phi, dphi) = o.transport_map(1.0, x).unwrap();
            assert!(close(phi, 2.0 * x + 1.0, 1e-15));
            assert!(close(dphi, 2.0, 1e-15));
        }
        assert!(close(o.alpha_t(1.0, 0.0).unwrap(), 0.5, 1e-15));
        assert!(close(o.kernel(3.0).unwrap(), 0.75, 1e-15));
        // S(t, q(t)) is the action p^2 t / 2
        assert!(close(o.phase(2.0, 2.0).unwrap(), 1.0, 1e-14));
        assert!(close(o.inverse_transport(1.0, 1.0).unwrap(), 0.0, 1e-15));
    }

    #[test]
    fn free_particle_caustic_at_minus_inverse_alpha() {
        let m = HamiltonianModel::free();
        let o = AnalyticOracle::new(&m, QuadraticPhase::new(0.0, 0.0, -1.0)).unwrap();
        assert!(o.alpha_t(0.999, 0.0).unwrap() < -999.0 + 1.0);
        assert!(matches!(o.transport_map(1.0, 0.0), Err(Error::CausticDomain(_))));
        assert!(matches!(o.kernel(1.5), Err(Error::CausticDomain(_))));
    }

    #[test]
    fn barrier_closed_forms() {
        let m = HamiltonianModel::barrier(1.0).unwrap();
        let (p, q) = (0.3, -0.2);
        let o = AnalyticOracle::new(&m, QuadraticPhase::new(p, q, 1.0)).unwrap();
        for &t in &[0.0, 0.5, 2.0, 6.0] {
            let c = o.kernel(t).unwrap();
            assert!(close(c, (1.0 - (-2.0 * t).exp()) / 2.0, 1e-13), "t={t}");
            let (phi, dphi) = o.transport_map(t, q + 0.1).unwrap();
            let qt = p * f64::sinh(t) + q * f64::cosh(t);
            assert!(close(phi, t.exp() * 0.1 + qt, 1e-13));
            assert!(close(dphi, t.exp(), 1e-13));
            let (end, tangent, action) = o.flow(PhasePoint::new(p, q), t).unwrap();
            let l = 0.5 * ((p * p + q * q) * (2.0 * t).sinh() / 2.0 + p * q * ((2.0 * t).cosh() - 1.0));
            assert!(close(action, l, 1e-13));
            assert!(close(end.q, qt, 1e-14));
            assert!((tangent.det() - 1.0).abs() < 1e-15 * tangent.frobenius().powi(2));
            // S(t, y) = L(t) + p(t)(y - q(t)) + (y - q(t))^2 / 2
            let y = qt + 0.3;
            assert!(close(o.phase(t, y).unwrap(), l + end.p * 0.3 + 0.045, 1e-12));
        }
        // alpha = -lambda: the kernel grows like e^{2 lambda t}
        let s = AnalyticOracle::new(&m, QuadraticPhase::new(0.0, 0.0, -1.0)).unwrap();
        assert!(close(s.kernel(3.0).unwrap(), ((6.0f64).exp() - 1.0) / 2.0, 1e-12));
        assert!(close(s.transport_map(3.0, 0.5).unwrap().0, 0.5 * (-3.0f64).exp(), 1e-13));
    }

    #[test]
    fn barrier_kernel_general_alpha() {
        let m = HamiltonianModel::barrier(4.0).unwrap();
        let l: f64 = 2.0;
        for &a in &[-1.5, 0.0, 0.7, 3.0] {
            let o = AnalyticOracle::new(&m, QuadraticPhase::new(0.1, 0.2, a)).unwrap();
            for &t in &[0.3, 1.0, 2.5] {
                let f = (l * t).cosh() + a / l * (l * t).sinh();
                assert!(close(o.kernel(t).unwrap(), (l * t).sinh() / (l * f), 1e-13));
                let at = ((l * t).cosh() * a + l * (l * t).sinh()) / ((l * t).sinh() * a / l + (l * t).cosh());
                assert!(close(o.alpha_t(t, 0.2).unwrap(), at, 1e-13));
            }
        }
    }

    #[test]
    fn integrable_closed_forms() {
        let m = HamiltonianModel::integrable(Dispersion::quartic(0.1));
        let ph = QuadraticPhase::new(1.0, 0.0, 0.5);
        let o = AnalyticOracle::new(&m, ph).unwrap();
        let h2 = 1.0 + 1.2;
        for &t in &[0.5, 2.0] {
            assert!(close(o.kernel(t).unwrap(), h2 * t / (1.0 + 0.5 * t * h2), 1e-14));
            for &x in &[-0.3, 0.0, 0.4] {
                let p = ph.momentum(x);
                let (phi, dphi) = o.transport_map(t, x).unwrap();
                assert!(close(phi, x + t * (p + 0.4 * p.powi(3)), 1e-14));
                assert!(dphi > 1.0);
                let back = o.inverse_transport(t, phi).unwrap();
                assert!((back - x).abs() < 1e-12);
                // dS/dy equals the conserved momentum
                let h = 1e-5;
                let ds = (o.phase(t, phi + h).unwrap() - o.phase(t, phi - h).unwrap()) / (2.0 * h);
                assert!((ds - p).abs() < 1e-7, "{ds} {p}");
            }
        }
    }

    #[test]
    fn initial_conditions() {
        let models = [
            HamiltonianModel::free(),
            HamiltonianModel::barrier(2.0).unwrap(),
            HamiltonianModel::integrable(Dispersion::quartic(0.1)),
            HamiltonianModel::potential(Potential::harmonic()),
        ];
        let ph = QuadraticPhase::new(0.5, 0.1, 0.8);
        for m in &models {
            let o = AnalyticOracle::new(m, ph).unwrap();
            for &x in &[-1.0, 0.1, 0.9] {
                assert_eq!(o.transport_map(0.0, x).unwrap(), (x, 1.0));
                assert!(close(o.phase(0.0, x).unwrap(), ph.s0(x), 1e-14));
            }
            assert_eq!(o.alpha_t(0.0, 0.1).unwrap(), 0.8);
            assert_eq!(o.kernel(0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn kernel_matches_quadrature_of_curvature() {
        let m = HamiltonianModel::barrier(1.0).unwrap();
        let o = AnalyticOracle::new(&m, QuadraticPhase::new(0.0, 0.0, 1.0)).unwrap();
        let n = 4000;
        let t = 4.0;
        let h = t / n as f64;
        let mut acc = 0.0;
        for i in 0..=n {
            let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * o.curvature(i as f64 * h).unwrap();
        }
        acc *= h / 3.0;
        assert!((acc - o.kernel(t).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn unsupported_models() {
        let k = HamiltonianModel::kicked_harmonic(2.0).unwrap();
        let ph = QuadraticPhase::new(0.0, 0.0, 0.0);
        assert!(matches!(
            analytic_oracle(&k, ph, OracleKind::Flow, 1.0, 0.0),
            Err(Error::Unsupported(_))
        ));
        let f = HamiltonianModel::free();
        let v = analytic_oracle(&f, QuadraticPhase::new(1.0, 0.0, 1.0), OracleKind::TransportMap, 1.0, 0.0)
            .unwrap();
        assert_eq!(
            v,
            OracleValue::TransportMap {
                phi: 1.0,
                dphi: 2.0,
                alpha_t: 0.5
            }
        );
    }
}
