use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fourier::SpectralPlan;
use super::grid::GridSpec;
use crate::error::{Error, Result};
use crate::interp::lagrange6;

/// A point `(p, q)` of the phase plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhasePoint {
    pub p: f64,
    pub q: f64,
}

impl PhasePoint {
    pub const fn new(p: f64, q: f64) -> Self {
        Self { p, q }
    }

    pub fn is_finite(&self) -> bool {
        self.p.is_finite() && self.q.is_finite()
    }

    pub fn distance(&self, other: &PhasePoint) -> f64 {
        (self.p - other.p).hypot(self.q - other.q)
    }
}

/// Complex amplitude sampled on a [`GridSpec`], with the value of hbar it lives at.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    grid: GridSpec,
    values: Vec<Complex64>,
    hbar: f64,
}

impl WaveFunction {
    pub fn new(grid: GridSpec, values: Vec<Complex64>, hbar: f64) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::InvalidGrid(format!(
                "{} samples for a grid of {} points",
                values.len(),
                grid.n_points()
            )));
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::InvalidParameter(format!("hbar must be positive, got {hbar}")));
        }
        Ok(Self { grid, values, hbar })
    }

    pub fn zeros(grid: GridSpec, hbar: f64) -> Result<Self> {
        Self::new(grid, vec![Complex64::new(0.0, 0.0); grid.n_points()], hbar)
    }

    /// Samples `f` at every grid point. Panics if `hbar <= 0`.
    pub fn from_fn(grid: GridSpec, hbar: f64, f: impl Fn(f64) -> Complex64) -> Self {
        assert!(hbar > 0.0, "hbar must be positive");
        Self {
            grid,
            values: grid.points().map(f).collect(),
            hbar,
        }
    }

    /// The Gaussian coherent state
    /// `(Im b / pi hbar)^{1/4} exp(i/hbar [p (x-q) + b (x-q)^2 / 2])`.
    pub fn coherent_state(grid: GridSpec, hbar: f64, z: PhasePoint, b: Complex64) -> Result<Self> {
        if b.im <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "coherent state width needs Im b > 0, got {b}"
            )));
        }
        if !(hbar > 0.0) {
            return Err(Error::InvalidParameter(format!("hbar must be positive, got {hbar}")));
        }
        let norm = (b.im / (PI * hbar)).powf(0.25);
        Ok(Self::from_fn(grid, hbar, |x| {
            let d = x - z.q;
            let phase = (Complex64::new(z.p * d, 0.0) + b * (0.5 * d * d)) / hbar;
            norm * (Complex64::i() * phase).exp()
        }))
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn with_values(&self, values: Vec<Complex64>) -> Result<Self> {
        Self::new(self.grid, values, self.hbar)
    }

    /// `sum |psi|^2 dx`.
    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            self.values.iter_mut().for_each(|v| *v /= n);
        }
    }

    pub fn normalized(mut self) -> Self {
        self.normalize();
        self
    }

    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    pub fn check_compatible(&self, other: &WaveFunction) -> Result<()> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::IncompatibleGrid(format!(
                "{:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        if (self.hbar - other.hbar).abs() > 1e-15 * self.hbar {
            return Err(Error::IncompatibleGrid(format!(
                "hbar {} vs {}",
                self.hbar, other.hbar
            )));
        }
        Ok(())
    }

    /// `sum conj(self) * other dx`.
    pub fn overlap(&self, other: &WaveFunction) -> Result<Complex64> {
        self.check_compatible(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * self.grid.dx())
    }

    /// `|<self|other>| / (||self|| ||other||)`.
    pub fn fidelity(&self, other: &WaveFunction) -> Result<f64> {
        let o = self.overlap(other)?;
        let d = self.norm() * other.norm();
        Ok(if d == 0.0 { 0.0 } else { o.norm() / d })
    }

    /// `||self - other||`.
    pub fn distance(&self, other: &WaveFunction) -> Result<f64> {
        self.check_compatible(other)?;
        Ok((self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            * self.grid.dx())
        .sqrt())
    }

    /// Mass in the outer `fraction` of the interval at each end.
    pub fn boundary_mass(&self, fraction: f64) -> f64 {
        let n = self.values.len();
        let edge = ((n as f64) * fraction).ceil() as usize;
        let dx = self.grid.dx();
        let left: f64 = self.values[..edge.min(n)].iter().map(|v| v.norm_sqr()).sum();
        let right: f64 = self.values[n.saturating_sub(edge)..]
            .iter()
            .map(|v| v.norm_sqr())
            .sum();
        (left + right) * dx
    }

    /// Fraction of momentum-space mass above `fraction` of the Nyquist momentum.
    pub fn momentum_boundary_mass(&self, fraction: f64) -> f64 {
        SpectralPlan::new(self.grid, self.hbar).momentum_edge_mass(&self.values, fraction)
    }

    pub fn mean_position(&self) -> f64 {
        let dx = self.grid.dx();
        let num: f64 = self
            .grid
            .points()
            .zip(&self.values)
            .map(|(x, v)| x * v.norm_sqr())
            .sum::<f64>()
            * dx;
        num / self.norm_sqr()
    }

    pub fn mean_momentum(&self) -> f64 {
        let plan = SpectralPlan::new(self.grid, self.hbar);
        let mut buf = self.values.clone();
        plan.fft(&mut buf);
        let total: f64 = buf.iter().map(|v| v.norm_sqr()).sum();
        buf.iter()
            .zip(plan.momenta())
            .map(|(v, xi)| xi * v.norm_sqr())
            .sum::<f64>()
            / total
    }

    /// Six-point Lagrange interpolation; zero outside the grid.
    pub fn interpolate(&self, x: f64) -> Complex64 {
        lagrange6(&self.values, self.grid.fractional_index(x))
    }

    /// Multiplies every sample by `f(x)`.
    pub fn multiply_by(&mut self, f: impl Fn(f64) -> Complex64) {
        let grid = self.grid;
        self.values
            .iter_mut()
            .zip(grid.points())
            .for_each(|(v, x)| *v *= f(x));
    }
}

/// `sum conj(a) b dx` for two states on the same grid.
pub fn overlap(psi_a: &WaveFunction, psi_b: &WaveFunction) -> Result<Complex64> {
    psi_a.overlap(psi_b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::symmetric(4.0, 2048).unwrap()
    }

    #[test]
    fn coherent_state_is_normalised() {
        let psi = WaveFunction::coherent_state(grid(), 0.01, PhasePoint::new(1.0, 0.5), Complex64::new(0.3, 2.0)).unwrap();
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-10);
        assert!((psi.mean_position() - 0.5).abs() < 1e-10);
        assert!((psi.mean_momentum() - 1.0).abs() < 1e-8);
        assert!(WaveFunction::coherent_state(grid(), 0.01, PhasePoint::default(), Complex64::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn self_overlap_is_norm() {
        let psi = WaveFunction::coherent_state(grid(), 0.02, PhasePoint::new(0.2, -0.3), Complex64::i()).unwrap();
        let o = psi.overlap(&psi).unwrap();
        assert_eq!(o.im, 0.0);
        assert!((o.re - psi.norm_sqr()).abs() < 1e-15);
    }

    #[test]
    fn parity_pair_is_orthogonal() {
        let hbar = 0.05;
        let even = WaveFunction::from_fn(grid(), hbar, |x| Complex64::new((-x * x / (2.0 * hbar)).exp(), 0.0));
        // symmetric about x = 0 needs the grid reflected onto itself: use x and -x samples
        let odd = WaveFunction::from_fn(grid(), hbar, |x| Complex64::new(x * (-x * x / (2.0 * hbar)).exp(), 0.0));
        assert!(even.overlap(&odd).unwrap().norm() < 1e-12);
    }

    #[test]
    fn displaced_gaussian_overlap() {
        // |<psi_0|psi_d>| = exp(-d^2 / 4 hbar) for b = i
        let hbar = 0.03;
        let d = 0.2;
        let a = WaveFunction::coherent_state(grid(), hbar, PhasePoint::new(0.0, 0.0), Complex64::i()).unwrap();
        let b = WaveFunction::coherent_state(grid(), hbar, PhasePoint::new(0.0, d), Complex64::i()).unwrap();
        let got = a.overlap(&b).unwrap().norm();
        assert!((got - (-d * d / (4.0 * hbar)).exp()).abs() < 1e-8);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = WaveFunction::zeros(grid(), 0.1).unwrap();
        let b = WaveFunction::zeros(GridSpec::symmetric(4.0, 1024).unwrap(), 0.1).unwrap();
        assert!(matches!(a.overlap(&b), Err(Error::IncompatibleGrid(_))));
        let c = WaveFunction::zeros(grid(), 0.2).unwrap();
        assert!(overlap(&a, &c).is_err());
    }
}
