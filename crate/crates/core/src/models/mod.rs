//! Catalogue of one-dimensional Hamiltonians, initial quadratic phases and
//! closed-form reference solutions.

mod oracle;

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase_space::PhasePoint;

pub(crate) use oracle::{analytic_flow, quadratic_flow};
pub use oracle::{analytic_oracle, AnalyticOracle, OracleKind, OracleValue};

type Scalar = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A scalar function with its first two derivatives supplied by the caller.
#[derive(Clone)]
pub struct ScalarFunction {
    name: String,
    f: Scalar,
    df: Scalar,
    d2f: Scalar,
}

impl ScalarFunction {
    pub fn new<F, G, H>(name: impl Into<String>, f: F, df: G, d2f: H) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
        H: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            f: Arc::new(f),
            df: Arc::new(df),
            d2f: Arc::new(d2f),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn value(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn d1(&self, x: f64) -> f64 {
        (self.df)(x)
    }

    pub fn d2(&self, x: f64) -> f64 {
        (self.d2f)(x)
    }
}

impl fmt::Debug for ScalarFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarFunction({})", self.name)
    }
}

/// Kinetic term `h(xi)` of a Hamiltonian that depends on momentum only.
#[derive(Clone, Debug)]
pub struct Dispersion {
    func: ScalarFunction,
}

impl Dispersion {
    pub fn new(func: ScalarFunction) -> Self {
        Self { func }
    }

    /// `xi^2/2 + eps xi^4`.
    pub fn quartic(eps: f64) -> Self {
        Self::new(ScalarFunction::new(
            format!("xi^2/2 + {eps} xi^4"),
            move |x| 0.5 * x * x + eps * x.powi(4),
            move |x| x + 4.0 * eps * x.powi(3),
            move |x| 1.0 + 12.0 * eps * x * x,
        ))
    }

    pub fn function(&self) -> &ScalarFunction {
        &self.func
    }

    pub fn h(&self, xi: f64) -> f64 {
        self.func.value(xi)
    }

    pub fn h1(&self, xi: f64) -> f64 {
        self.func.d1(xi)
    }

    pub fn h2(&self, xi: f64) -> f64 {
        self.func.d2(xi)
    }
}

/// Potential `V(q)` of a Hamiltonian `p^2/2 + V(q)`.
#[derive(Clone, Debug)]
pub struct Potential {
    func: ScalarFunction,
    quadratic: Option<f64>,
}

impl Potential {
    pub fn new(func: ScalarFunction) -> Self {
        Self {
            func,
            quadratic: None,
        }
    }

    /// `V(q) = c q^2 / 2`.
    pub fn quadratic(c: f64) -> Self {
        Self {
            func: ScalarFunction::new(
                format!("{c} q^2/2"),
                move |q| 0.5 * c * q * q,
                move |q| c * q,
                move |_| c,
            ),
            quadratic: Some(c),
        }
    }

    pub fn harmonic() -> Self {
        Self::quadratic(1.0)
    }

    pub fn function(&self) -> &ScalarFunction {
        &self.func
    }

    /// Coefficient `c` if the potential is exactly `c q^2 / 2`.
    pub fn quadratic_coefficient(&self) -> Option<f64> {
        self.quadratic
    }

    pub fn v(&self, q: f64) -> f64 {
        self.func.value(q)
    }

    pub fn v1(&self, q: f64) -> f64 {
        self.func.d1(q)
    }

    pub fn v2(&self, q: f64) -> f64 {
        self.func.d2(q)
    }
}

/// The Hamiltonians the propagators understand.
#[derive(Clone, Debug)]
pub enum HamiltonianModel {
    /// `p^2 / 2`.
    FreeParticle,
    /// `h(p)`.
    IntegrableMomentum(Dispersion),
    /// `p^2/2 - v0 q^2/2`.
    ParabolicBarrier { v0: f64 },
    /// `p^2/2 + V(q)`.
    StandardPotential(Potential),
    /// `(p^2 + q^2)/2 + K cos q * sum_n delta(t - n)`.
    KickedHarmonic { k: f64 },
}

impl HamiltonianModel {
    pub fn free() -> Self {
        Self::FreeParticle
    }

    pub fn integrable(h: Dispersion) -> Self {
        Self::IntegrableMomentum(h)
    }

    pub fn barrier(v0: f64) -> Result<Self> {
        if !(v0 > 0.0 && v0.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "barrier curvature v0 must be positive, got {v0}"
            )));
        }
        Ok(Self::ParabolicBarrier { v0 })
    }

    pub fn potential(v: Potential) -> Self {
        Self::StandardPotential(v)
    }

    pub fn kicked_harmonic(k: f64) -> Result<Self> {
        if !k.is_finite() {
            return Err(Error::InvalidParameter(format!("kick strength {k}")));
        }
        Ok(Self::KickedHarmonic { k })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::FreeParticle => "free",
            Self::IntegrableMomentum(_) => "integrable",
            Self::ParabolicBarrier { .. } => "barrier",
            Self::StandardPotential(_) => "potential",
            Self::KickedHarmonic { .. } => "kho",
        }
    }

    /// `sqrt(v0)` for the barrier.
    pub fn barrier_lambda(&self) -> Option<f64> {
        match self {
            Self::ParabolicBarrier { v0 } => Some(v0.sqrt()),
            _ => None,
        }
    }

    pub fn is_kicked(&self) -> bool {
        matches!(self, Self::KickedHarmonic { .. })
    }

    /// Kinetic energy `T(p)`.
    pub fn kinetic(&self, p: f64) -> f64 {
        match self {
            Self::IntegrableMomentum(h) => h.h(p),
            _ => 0.5 * p * p,
        }
    }

    pub fn kinetic_d1(&self, p: f64) -> f64 {
        match self {
            Self::IntegrableMomentum(h) => h.h1(p),
            _ => p,
        }
    }

    pub fn kinetic_d2(&self, p: f64) -> f64 {
        match self {
            Self::IntegrableMomentum(h) => h.h2(p),
            _ => 1.0,
        }
    }

    /// Smooth part of the potential (the kick is excluded for the KHO).
    pub fn potential_energy(&self, q: f64) -> f64 {
        match self {
            Self::FreeParticle | Self::IntegrableMomentum(_) => 0.0,
            Self::ParabolicBarrier { v0 } => -0.5 * v0 * q * q,
            Self::StandardPotential(v) => v.v(q),
            Self::KickedHarmonic { .. } => 0.5 * q * q,
        }
    }

    pub fn potential_d1(&self, q: f64) -> f64 {
        match self {
            Self::FreeParticle | Self::IntegrableMomentum(_) => 0.0,
            Self::ParabolicBarrier { v0 } => -v0 * q,
            Self::StandardPotential(v) => v.v1(q),
            Self::KickedHarmonic { .. } => q,
        }
    }

    pub fn potential_d2(&self, q: f64) -> f64 {
        match self {
            Self::FreeParticle | Self::IntegrableMomentum(_) => 0.0,
            Self::ParabolicBarrier { v0 } => -v0,
            Self::StandardPotential(v) => v.v2(q),
            Self::KickedHarmonic { .. } => 1.0,
        }
    }

    /// Coefficient `c` when the smooth Hamiltonian is `p^2/2 + c q^2/2`.
    pub fn quadratic_coefficient(&self) -> Option<f64> {
        match self {
            Self::FreeParticle => Some(0.0),
            Self::ParabolicBarrier { v0 } => Some(-v0),
            Self::StandardPotential(v) => v.quadratic_coefficient(),
            Self::KickedHarmonic { .. } => Some(1.0),
            Self::IntegrableMomentum(_) => None,
        }
    }

    /// Energy of the smooth part.
    pub fn eval(&self, z: PhasePoint) -> f64 {
        self.kinetic(z.p) + self.potential_energy(z.q)
    }

    /// `(dH/dp, dH/dq)`.
    pub fn grad(&self, z: PhasePoint) -> (f64, f64) {
        (self.kinetic_d1(z.p), self.potential_d1(z.q))
    }

    /// Hessian in `(p, q)` ordering.
    pub fn hess(&self, z: PhasePoint) -> [[f64; 2]; 2] {
        [[self.kinetic_d2(z.p), 0.0], [0.0, self.potential_d2(z.q)]]
    }

    /// Momentum jump `K sin q` of the kick; zero for unkicked models.
    pub fn kick_impulse(&self, q: f64) -> f64 {
        match self {
            Self::KickedHarmonic { k } => k * q.sin(),
            _ => 0.0,
        }
    }

    /// Kick potential `K cos q`; its action contribution is the negative.
    pub fn kick_potential(&self, q: f64) -> f64 {
        match self {
            Self::KickedHarmonic { k } => k * q.cos(),
            _ => 0.0,
        }
    }

    /// Samples `h' > 0` and `h'' >= 0` on a momentum window.
    pub fn check_momentum_window(&self, p_lo: f64, p_hi: f64, samples: usize) -> Result<()> {
        let Self::IntegrableMomentum(h) = self else {
            return Ok(());
        };
        let n = samples.max(2);
        for i in 0..n {
            let xi = p_lo + (p_hi - p_lo) * i as f64 / (n - 1) as f64;
            if !(h.h1(xi) > 0.0) || h.h2(xi) < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "dispersion {} violates h' > 0, h'' >= 0 at xi = {xi}",
                    h.function().name()
                )));
            }
        }
        Ok(())
    }
}

/// Default momentum window `p0 +- 5 sqrt(hbar) (1 + |alpha|)`.
pub fn momentum_window(phase: &QuadraticPhase, hbar: f64) -> (f64, f64) {
    let half = 5.0 * hbar.sqrt() * (1.0 + phase.alpha.abs());
    (phase.p0 - half, phase.p0 + half)
}

/// `S0(x) = p0 (x - q0) + alpha (x - q0)^2 / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticPhase {
    pub p0: f64,
    pub q0: f64,
    pub alpha: f64,
}

impl QuadraticPhase {
    pub fn new(p0: f64, q0: f64, alpha: f64) -> Self {
        Self { p0, q0, alpha }
    }

    /// Slope `alpha = tan(theta)`; vertical manifolds are rejected.
    pub fn from_theta(p0: f64, q0: f64, theta: f64) -> Result<Self> {
        if !theta.is_finite() || (theta.abs() - FRAC_PI_2).abs() < 1e-12 || theta.abs() > FRAC_PI_2
        {
            return Err(Error::InvalidParameter(format!(
                "theta = {theta} gives a vertical or out-of-range initial manifold"
            )));
        }
        Ok(Self::new(p0, q0, theta.tan()))
    }

    pub fn center(&self) -> PhasePoint {
        PhasePoint::new(self.p0, self.q0)
    }

    pub fn s0(&self, x: f64) -> f64 {
        let d = x - self.q0;
        self.p0 * d + 0.5 * self.alpha * d * d
    }

    /// `S0'(x)`, the momentum on the manifold above `x`.
    pub fn momentum(&self, x: f64) -> f64 {
        self.p0 + self.alpha * (x - self.q0)
    }

    pub fn point(&self, x: f64) -> PhasePoint {
        PhasePoint::new(self.momentum(x), x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quartic_potential() -> Potential {
        Potential::new(ScalarFunction::new(
            "q^4/4 - q^2/2",
            |q| 0.25 * q.powi(4) - 0.5 * q * q,
            |q| q.powi(3) - q,
            |q| 3.0 * q * q - 1.0,
        ))
    }

    fn models() -> Vec<HamiltonianModel> {
        vec![
            HamiltonianModel::free(),
            HamiltonianModel::integrable(Dispersion::quartic(0.1)),
            HamiltonianModel::barrier(2.0).unwrap(),
            HamiltonianModel::potential(quartic_potential()),
            HamiltonianModel::kicked_harmonic(2.0).unwrap(),
        ]
    }

    #[test]
    fn catalogue_values() {
        let b = HamiltonianModel::barrier(1.0).unwrap();
        let o = PhasePoint::new(0.0, 0.0);
        assert_eq!(b.eval(o), 0.0);
        assert_eq!(b.grad(o), (0.0, 0.0));
        assert_eq!(b.hess(o), [[1.0, 0.0], [0.0, -1.0]]);
        let f = HamiltonianModel::free();
        let z = PhasePoint::new(2.0, 5.0);
        assert_eq!(f.eval(z), 2.0);
        assert_eq!(f.grad(z), (2.0, 0.0));
        let k = HamiltonianModel::kicked_harmonic(2.0).unwrap();
        assert!((k.kick_impulse(FRAC_PI_2) - 2.0).abs() < 1e-15);
        assert_eq!(HamiltonianModel::barrier(4.0).unwrap().barrier_lambda(), Some(2.0));
    }

    #[test]
    fn invalid_parameters() {
        assert!(HamiltonianModel::barrier(0.0).is_err());
        assert!(HamiltonianModel::barrier(-1.0).is_err());
        assert!(QuadraticPhase::from_theta(0.0, 0.0, FRAC_PI_2).is_err());
        assert!(QuadraticPhase::from_theta(0.0, 0.0, -FRAC_PI_2).is_err());
        let ph = QuadraticPhase::from_theta(0.0, 0.0, 0.25 * std::f64::consts::PI).unwrap();
        assert!((ph.alpha - 1.0).abs() < 1e-15);
    }

    #[test]
    fn momentum_window_check() {
        let m = HamiltonianModel::integrable(Dispersion::quartic(0.1));
        assert!(m.check_momentum_window(0.5, 2.0, 64).is_ok());
        assert!(m.check_momentum_window(-1.0, 1.0, 64).is_err());
        let bad = HamiltonianModel::integrable(Dispersion::quartic(-0.1));
        assert!(bad.check_momentum_window(1.0, 2.0, 64).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let pts = [(0.3, -0.7), (1.2, 0.4), (-0.8, 2.1), (2.0, -1.5)];
        for m in models() {
            for &(p, q) in &pts {
                let z = PhasePoint::new(p, q);
                let h = 1e-5;
                let dp = (m.eval(PhasePoint::new(p + h, q)) - m.eval(PhasePoint::new(p - h, q)))
                    / (2.0 * h);
                let dq = (m.eval(PhasePoint::new(p, q + h)) - m.eval(PhasePoint::new(p, q - h)))
                    / (2.0 * h);
                let (gp, gq) = m.grad(z);
                assert!((gp - dp).abs() <= 1e-8 * (1.0 + gp.abs()), "{}", m.name());
                assert!((gq - dq).abs() <= 1e-8 * (1.0 + gq.abs()), "{}", m.name());
                let hs = m.hess(z);
                let (gp2, _) = m.grad(PhasePoint::new(p + h, q));
                let (gp1, _) = m.grad(PhasePoint::new(p - h, q));
                assert!((hs[0][0] - (gp2 - gp1) / (2.0 * h)).abs() < 1e-7);
                assert_eq!(hs[0][1], hs[1][0]);
            }
        }
    }

    #[test]
    fn quadratic_phase_generates_manifold() {
        let ph = QuadraticPhase::new(1.0, 0.5, 2.0);
        assert_eq!(ph.s0(0.5), 0.0);
        let x = 1.3;
        let h = 1e-6;
        let fd = (ph.s0(x + h) - ph.s0(x - h)) / (2.0 * h);
        assert!((fd - ph.momentum(x)).abs() < 1e-8);
        assert_eq!(ph.point(0.5), PhasePoint::new(1.0, 0.5));
    }
}
