//! The hbar-scaled Fourier transform `A_hat(xi) = \int e^{-i x xi / hbar} A(x) dx`
//! and Fourier multipliers built on it.

use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::grid::GridSpec;
use super::wavefunction::WaveFunction;
use crate::error::{Error, Result};

fn planner() -> &'static Mutex<FftPlanner<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()))
}

/// Transform direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Amplitude sampled on the centred conjugate grid of a position grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumWaveFunction {
    /// Centred momentum grid, `xi_k = k * 2 pi hbar / L` for `k = -N/2..N/2`.
    pub grid: GridSpec,
    /// The position grid this amplitude was transformed from.
    pub position_grid: GridSpec,
    pub values: Vec<Complex64>,
    pub hbar: f64,
}

impl MomentumWaveFunction {
    /// `sum |A_hat|^2 d xi / (2 pi hbar)`, equal to the position norm by Parseval.
    pub fn norm_sqr(&self) -> f64 {
        let dxi = self.grid.dx();
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * dxi
            / (2.0 * std::f64::consts::PI * self.hbar)
    }

    pub fn momenta(&self) -> impl Iterator<Item = f64> + '_ {
        self.grid.points()
    }
}

/// Cached forward/inverse FFT pair plus the conjugate momenta of one grid.
#[derive(Clone)]
pub struct SpectralPlan {
    grid: GridSpec,
    hbar: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    momenta: Vec<f64>,
}

impl std::fmt::Debug for SpectralPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralPlan")
            .field("grid", &self.grid)
            .field("hbar", &self.hbar)
            .finish()
    }
}

impl SpectralPlan {
    pub fn new(grid: GridSpec, hbar: f64) -> Self {
        let n = grid.n_points();
        let (forward, inverse) = {
            let mut p = planner().lock().expect("fft planner poisoned");
            (p.plan_fft_forward(n), p.plan_fft_inverse(n))
        };
        Self {
            grid,
            hbar,
            forward,
            inverse,
            momenta: grid.momenta_fft_order(hbar),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// Conjugate momenta in FFT storage order.
    pub fn momenta(&self) -> &[f64] {
        &self.momenta
    }

    /// Tabulates `f(xi)` in FFT storage order.
    pub fn multiplier(&self, f: impl Fn(f64) -> Complex64) -> Vec<Complex64> {
        self.momenta.iter().map(|&xi| f(xi)).collect()
    }

    /// Unnormalised DFT in place.
    pub fn fft(&self, values: &mut [Complex64]) {
        self.forward.process(values);
    }

    /// Normalised inverse DFT in place.
    pub fn ifft(&self, values: &mut [Complex64]) {
        self.inverse.process(values);
        let scale = 1.0 / values.len() as f64;
        values.iter_mut().for_each(|v| *v *= scale);
    }

    /// Applies the Fourier multiplier `multiplier` (FFT order) in place.
    pub fn apply_multiplier(&self, values: &mut [Complex64], multiplier: &[Complex64]) {
        debug_assert_eq!(values.len(), multiplier.len());
        self.fft(values);
        values
            .iter_mut()
            .zip(multiplier)
            .for_each(|(v, m)| *v *= m);
        self.ifft(values);
    }

    /// Probability mass of `values` at momenta with `|xi| > fraction * nyquist`.
    pub fn momentum_edge_mass(&self, values: &[Complex64], fraction: f64) -> f64 {
        let mut buf = values.to_vec();
        self.fft(&mut buf);
        let cut = fraction * self.grid.nyquist_momentum(self.hbar);
        let total: f64 = buf.iter().map(|v| v.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        buf.iter()
            .zip(&self.momenta)
            .filter(|(_, xi)| xi.abs() > cut)
            .map(|(v, _)| v.norm_sqr())
            .sum::<f64>()
            / total
    }
}

/// Forward hbar-scaled transform of `psi` onto the centred conjugate grid.
pub fn hbar_fourier_transform(psi: &WaveFunction) -> MomentumWaveFunction {
    let grid = *psi.grid();
    let hbar = psi.hbar();
    let plan = SpectralPlan::new(grid, hbar);
    let mut buf = psi.values().to_vec();
    plan.fft(&mut buf);
    let n = grid.n_points();
    let dx = grid.dx();
    let x0 = grid.x_min();
    let mut values = vec![Complex64::new(0.0, 0.0); n];
    for (k, v) in buf.into_iter().enumerate() {
        let xi = plan.momenta[k];
        // shift from FFT order into centred order
        let slot = (k + n / 2) % n;
        values[slot] = v * dx * Complex64::from_polar(1.0, -x0 * xi / hbar);
    }
    MomentumWaveFunction {
        grid: grid.momentum_grid(hbar),
        position_grid: grid,
        values,
        hbar,
    }
}

/// Exact discrete inverse of [`hbar_fourier_transform`].
pub fn inverse_hbar_fourier_transform(m: &MomentumWaveFunction) -> Result<WaveFunction> {
    let grid = m.position_grid;
    let n = grid.n_points();
    if m.values.len() != n {
        return Err(Error::IncompatibleGrid(format!(
            "momentum amplitude has {} samples, position grid {}",
            m.values.len(),
            n
        )));
    }
    let plan = SpectralPlan::new(grid, m.hbar);
    let x0 = grid.x_min();
    let dx = grid.dx();
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (k, slot) in buf.iter_mut().enumerate() {
        let xi = plan.momenta[k];
        *slot = m.values[(k + n / 2) % n] * Complex64::from_polar(1.0, x0 * xi / m.hbar) / dx;
    }
    plan.ifft(&mut buf);
    WaveFunction::new(grid, buf, m.hbar)
}
