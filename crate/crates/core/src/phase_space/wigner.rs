//! Wigner function on a (q, p) lattice.
//!
//! For each position `q = x_m` the correlation `psi*(q + y) psi(q - y)` is
//! sampled on `y_j = j dx` and transformed in `y`, which puts `p` on the
//! lattice `k pi hbar / (N dx)` with `|p| <= pi hbar / (2 dx)`. The state is
//! treated as zero outside the grid.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::fourier::SpectralPlan;
use super::wavefunction::WaveFunction;
use crate::error::{Error, Result};

/// Which part of the (q, p) lattice to evaluate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WignerOptions {
    /// Evaluate every `q_stride`-th grid position.
    pub q_stride: usize,
    pub q_range: Option<(f64, f64)>,
    /// Momentum window; must lie within `+-pi hbar / (2 dx)`.
    pub p_range: Option<(f64, f64)>,
}

impl Default for WignerOptions {
    fn default() -> Self {
        Self {
            q_stride: 1,
            q_range: None,
            p_range: None,
        }
    }
}

/// `W(q, p)` on a rectangular lattice, stored row-major with one row per `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerField {
    pub qs: Vec<f64>,
    pub ps: Vec<f64>,
    pub values: Vec<f64>,
    pub dq: f64,
    pub dp: f64,
}

impl WignerField {
    pub fn get(&self, iq: usize, ip: usize) -> f64 {
        self.values[iq * self.ps.len() + ip]
    }

    pub fn row(&self, iq: usize) -> &[f64] {
        let n = self.ps.len();
        &self.values[iq * n..(iq + 1) * n]
    }

    /// `sum W dq dp` over the lattice.
    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.dq * self.dp
    }

    /// `sum W dq dp` over lattice points satisfying `region(q, p)`.
    pub fn mass_where(&self, region: impl Fn(f64, f64) -> bool) -> f64 {
        let mut acc = 0.0;
        for (iq, &q) in self.qs.iter().enumerate() {
            for (ip, &p) in self.ps.iter().enumerate() {
                if region(q, p) {
                    acc += self.get(iq, ip);
                }
            }
        }
        acc * self.dq * self.dp
    }

    /// `int W dp` for each row.
    pub fn position_marginal(&self) -> Vec<f64> {
        (0..self.qs.len())
            .map(|iq| self.row(iq).iter().sum::<f64>() * self.dp)
            .collect()
    }

    /// `int W dq` for each momentum column.
    pub fn momentum_marginal(&self) -> Vec<f64> {
        let np = self.ps.len();
        let mut out = vec![0.0; np];
        for iq in 0..self.qs.len() {
            for (o, w) in out.iter_mut().zip(self.row(iq)) {
                *o += w;
            }
        }
        out.iter_mut().for_each(|o| *o *= self.dq);
        out
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Wigner function `W(q, p) = (pi hbar)^{-1} int psi*(q+y) psi(q-y) e^{2ipy/hbar} dy`.
pub fn wigner_function(psi: &WaveFunction, opts: &WignerOptions) -> Result<WignerField> {
    let grid = *psi.grid();
    let hbar = psi.hbar();
    let n = grid.n_points();
    let dx = grid.dx();
    let dp = PI * hbar / (n as f64 * dx);
    let p_limit = PI * hbar / (2.0 * dx);
    if opts.q_stride == 0 {
        return Err(Error::InvalidParameter("q_stride must be >= 1".into()));
    }

    let (p_lo, p_hi) = opts.p_range.unwrap_or((-p_limit, p_limit));
    if p_lo < -p_limit - 1e-12 || p_hi > p_limit + 1e-12 || p_lo >= p_hi {
        return Err(Error::Bandwidth(format!(
            "momentum window [{p_lo}, {p_hi}] exceeds the Wigner limit +-{p_limit}"
        )));
    }
    // FFT-order momentum indices inside the window, sorted ascending in p
    let half = (n / 2) as isize;
    let k_lo = (p_lo / dp).ceil().max(-(half as f64)) as isize;
    let k_hi = (p_hi / dp).floor().min((half - 1) as f64) as isize;
    let ks: Vec<isize> = (k_lo..=k_hi).collect();
    let ps: Vec<f64> = ks.iter().map(|&k| k as f64 * dp).collect();

    let rows: Vec<usize> = (0..n)
        .step_by(opts.q_stride)
        .filter(|&m| match opts.q_range {
            Some((a, b)) => {
                let q = grid.point(m);
                q >= a && q <= b
            }
            None => true,
        })
        .collect();
    let qs: Vec<f64> = rows.iter().map(|&m| grid.point(m)).collect();

    let plan = SpectralPlan::new(grid, hbar);
    let values = psi.values();
    let scale = dx / (PI * hbar);
    let field: Vec<f64> = rows
        .par_iter()
        .flat_map_iter(|&m| {
            let mut corr = vec![Complex64::new(0.0, 0.0); n];
            // psi is taken as zero off the grid, not periodically continued
            let reach = (m as isize).min((n - 1 - m) as isize).min(half - 1);
            for j in -reach..=reach {
                let plus = (m as isize + j) as usize;
                let minus = (m as isize - j) as usize;
                corr[j.rem_euclid(n as isize) as usize] = values[plus].conj() * values[minus];
            }
            // sum_j f_j e^{+2 pi i jk/N} is N times the normalised inverse DFT
            plan.ifft(&mut corr);
            let nf = n as f64;
            ks.iter()
                .map(|&k| corr[k.rem_euclid(n as isize) as usize].re * nf * scale)
                .collect::<Vec<_>>()
        })
        .collect();

    Ok(WignerField {
        qs,
        ps,
        values: field,
        dq: dx * opts.q_stride as f64,
        dp,
    })
}
