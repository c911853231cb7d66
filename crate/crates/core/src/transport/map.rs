use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bundle::{build_bundle_with, BundleOptions, BundleSlice, TrajectoryBundle};
use crate::classical::flow;
use crate::error::{Error, Result};
use crate::interp::{hermite3, hermite3_derivative, hermite5, lagrange_clamped, Jet};
use crate::models::{HamiltonianModel, QuadraticPhase};
use crate::phase_space::WaveFunction;

/// The central trajectory `x = q0` at one sample time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CentralState {
    pub t: f64,
    pub q: f64,
    pub p: f64,
    pub action: f64,
    pub dphi: f64,
}

/// Interpolated `x -> phi(t, x)`, its inverse and the evolved phase.
#[derive(Debug, Clone)]
pub struct TransportMap {
    bundle: TrajectoryBundle,
    center: Vec<CentralState>,
}

impl TransportMap {
    pub fn new(bundle: TrajectoryBundle) -> Result<Self> {
        for s in &bundle.slices {
            let bad = s.dphi.iter().position(|&d| !(d > 0.0));
            let folded = s.q.windows(2).position(|w| !(w[1] > w[0]));
            if let Some(i) = bad.or(folded) {
                return Err(Error::Caustic {
                    t: s.t,
                    x: bundle.seeds[i],
                    derivative: s.dphi[i],
                });
            }
        }
        let phase0 = bundle.phase0;
        let mut center = Vec::with_capacity(bundle.slices.len());
        for s in &bundle.slices {
            let f = flow(&bundle.model, phase0.center(), s.t, bundle.options.dt_max)?;
            center.push(CentralState {
                t: s.t,
                q: f.end_point.q,
                p: f.end_point.p,
                action: f.action,
                dphi: f.tangent.qp() * phase0.alpha + f.tangent.qq(),
            });
        }
        Ok(Self { bundle, center })
    }

    pub fn bundle(&self) -> &TrajectoryBundle {
        &self.bundle
    }

    pub fn model(&self) -> &HamiltonianModel {
        &self.bundle.model
    }

    pub fn phase0(&self) -> QuadraticPhase {
        self.bundle.phase0
    }

    pub fn times(&self) -> Vec<f64> {
        self.bundle.times()
    }

    /// Seeded interval `[x_min, x_max]` of the initial manifold.
    pub fn window(&self) -> (f64, f64) {
        (self.bundle.seeds[0], *self.bundle.seeds.last().unwrap())
    }

    pub fn non_contraction(&self) -> f64 {
        self.bundle.non_contraction()
    }

    fn index(&self, t: f64) -> Result<usize> {
        self.bundle
            .slices
            .iter()
            .position(|s| (s.t - t).abs() <= 1e-12 * (1.0 + t.abs()))
            .ok_or_else(|| Error::InvalidParameter(format!("time {t} was not sampled by the map")))
    }

    fn slice(&self, t: f64) -> Result<&BundleSlice> {
        Ok(&self.bundle.slices[self.index(t)?])
    }

    pub fn central(&self, t: f64) -> Result<CentralState> {
        Ok(self.center[self.index(t)?])
    }

    /// `[phi(t, x_min), phi(t, x_max)]`.
    pub fn image(&self, t: f64) -> Result<(f64, f64)> {
        let s = self.slice(t)?;
        Ok((s.q[0], *s.q.last().unwrap()))
    }

    fn seed_position(&self, x: f64) -> Result<(usize, f64)> {
        let (lo, hi) = self.window();
        if !(x >= lo && x <= hi) {
            return Err(Error::OutOfDomain { y: x, lo, hi });
        }
        let h = self.bundle.seed_spacing();
        let f = (x - lo) / h;
        let i = (f.floor() as usize).min(self.bundle.seeds.len() - 2);
        Ok((i, f))
    }

    /// `phi(t, x)`.
    pub fn forward(&self, t: f64, x: f64) -> Result<f64> {
        let s = self.slice(t)?;
        let (i, f) = self.seed_position(x)?;
        let h = self.bundle.seed_spacing();
        Ok(hermite3(s.q[i], s.q[i + 1], s.dphi[i], s.dphi[i + 1], h, f - i as f64))
    }

    /// `phi'(t, x)`.
    pub fn derivative(&self, t: f64, x: f64) -> Result<f64> {
        let s = self.slice(t)?;
        let (_, f) = self.seed_position(x)?;
        Ok(lagrange_clamped(&s.dphi, f, 6))
    }

    /// `x` with `phi(t, x) = y`.
    pub fn inverse(&self, t: f64, y: f64) -> Result<f64> {
        let s = self.slice(t)?;
        invert_slice(s, &self.bundle.seeds, y)
    }

    /// `S(t, y) - S_c(t)`, where `S_c(t)` is the action of the central trajectory.
    pub fn relative_phase(&self, t: f64, y: f64) -> Result<f64> {
        let k = self.index(t)?;
        let s = &self.bundle.slices[k];
        let (j, u, h) = image_segment(s, y)?;
        let jet = |i: usize| self.phase_jet(s, k, i);
        Ok(hermite5(jet(j), jet(j + 1), h, u))
    }

    /// `S(t, y)`.
    pub fn phase(&self, t: f64, y: f64) -> Result<f64> {
        Ok(self.central(t)?.action + self.relative_phase(t, y)?)
    }

    /// Momentum `dS/dy` of the evolved manifold over `y`.
    pub fn momentum(&self, t: f64, y: f64) -> Result<f64> {
        let x = self.inverse(t, y)?;
        let s = self.slice(t)?;
        let (_, f) = self.seed_position(x)?;
        Ok(lagrange_clamped(&s.p, f, 6))
    }

    fn phase_jet(&self, s: &BundleSlice, k: usize, i: usize) -> Jet {
        let x = self.bundle.seeds[i];
        Jet {
            value: self.bundle.phase0.s0(x) + s.action[i] - self.center[k].action,
            slope: s.p[i],
            curvature: s.dp_dx[i] / s.dphi[i],
        }
    }

    /// `A(t, x) = H_pp / phi'(t, x)^2`.
    pub fn curvature(&self, t: f64, x: f64) -> Result<f64> {
        let d = self.derivative(t, x)?;
        if !(d >= self.bundle.options.caustic_threshold) {
            return Err(Error::Caustic { t, x, derivative: d });
        }
        let s = self.slice(t)?;
        let (_, f) = self.seed_position(x)?;
        let p = lagrange_clamped(&s.p, f, 6);
        Ok(self.bundle.model.kinetic_d2(p) / (d * d))
    }

    /// `int |A|^2` outside the seeded window.
    pub fn mass_deficit(&self, amplitude: &WaveFunction) -> f64 {
        let (lo, hi) = self.window();
        let dx = amplitude.grid().dx();
        amplitude
            .grid()
            .points()
            .zip(amplitude.values())
            .filter(|(x, _)| *x < lo || *x > hi)
            .map(|(_, v)| v.norm_sqr())
            .sum::<f64>()
            * dx
    }
}

fn invert_slice(s: &BundleSlice, seeds: &[f64], y: f64) -> Result<f64> {
    let (j, _, _) = image_segment(s, y)?;
    let h = seeds[1] - seeds[0];
    let (q0, q1, d0, d1) = (s.q[j], s.q[j + 1], s.dphi[j], s.dphi[j + 1]);
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut u = ((y - q0) / (q1 - q0)).clamp(0.0, 1.0);
    for _ in 0..100 {
        let r = hermite3(q0, q1, d0, d1, h, u) - y;
        if r.abs() <= 1e-13 * (1.0 + y.abs()) {
            break;
        }
        if r > 0.0 {
            hi = u;
        } else {
            lo = u;
        }
        let d = hermite3_derivative(q0, q1, d0, d1, h, u) * h;
        let next = u - r / d;
        u = if d > 0.0 && next > lo && next < hi { next } else { 0.5 * (lo + hi) };
        if hi - lo < 1e-16 {
            break;
        }
    }
    Ok(seeds[j] + u * h)
}

/// Segment `j` of the image with `q_j <= y <= q_{j+1}`, local coordinate and length.
fn image_segment(s: &BundleSlice, y: f64) -> Result<(usize, f64, f64)> {
    let (lo, hi) = (s.q[0], *s.q.last().unwrap());
    if !(y >= lo && y <= hi) {
        return Err(Error::OutOfDomain { y, lo, hi });
    }
    let j = s.q.partition_point(|&q| q <= y).saturating_sub(1).min(s.q.len() - 2);
    let h = s.q[j + 1] - s.q[j];
    Ok((j, (y - s.q[j]) / h, h))
}

/// `x` with `phi(t, x) = y`.
pub fn invert_transport(map: &TransportMap, t: f64, y: f64) -> Result<f64> {
    map.inverse(t, y)
}

/// `S(t, y)` reconstructed from the seed actions.
pub fn evolved_phase(map: &TransportMap, t: f64, y: f64) -> Result<f64> {
    map.phase(t, y)
}

/// `A(t, x)`.
#[allow(non_snake_case)]
pub fn curvature_matrix_A(map: &TransportMap, t: f64, x: f64) -> Result<f64> {
    map.curvature(t, x)
}

/// `(T(t) A)(y) = phi'(x)^{-1/2} A(x)` with `x = phi^{-1}(t, y)`; zero off the image.
pub fn transport_operator(map: &TransportMap, t: f64, amplitude: &WaveFunction) -> Result<WaveFunction> {
    let k = map.index(t)?;
    let s = &map.bundle.slices[k];
    let seeds = &map.bundle.seeds;
    let (lo, hi) = (s.q[0], *s.q.last().unwrap());
    let grid = *amplitude.grid();
    let xs: Vec<f64> = grid.points().collect();
    let out: Vec<Complex64> = xs
        .par_iter()
        .map(|&y| {
            if y < lo || y > hi {
                return Complex64::new(0.0, 0.0);
            }
            let x = invert_slice(s, seeds, y).expect("y lies in the image");
            let f = (x - seeds[0]) / (seeds[1] - seeds[0]);
            let d = lagrange_clamped(&s.dphi, f, 6);
            amplitude.interpolate(x) / d.sqrt()
        })
        .collect();
    amplitude.with_values(out)
}

/// `(T(t)^* B)(x) = phi'(x)^{1/2} B(phi(t, x))` on the seeded window; zero elsewhere.
pub fn transport_operator_adjoint(
    map: &TransportMap,
    t: f64,
    amplitude: &WaveFunction,
) -> Result<WaveFunction> {
    let k = map.index(t)?;
    let s = &map.bundle.slices[k];
    let (lo, hi) = map.window();
    let h = map.bundle.seed_spacing();
    let grid = *amplitude.grid();
    let xs: Vec<f64> = grid.points().collect();
    let out: Vec<Complex64> = xs
        .par_iter()
        .map(|&x| {
            if x < lo || x > hi {
                return Complex64::new(0.0, 0.0);
            }
            let f = (x - lo) / h;
            let i = (f.floor() as usize).min(s.q.len() - 2);
            let y = hermite3(s.q[i], s.q[i + 1], s.dphi[i], s.dphi[i + 1], h, f - i as f64);
            let d = lagrange_clamped(&s.dphi, f, 6);
            amplitude.interpolate(y) * d.sqrt()
        })
        .collect();
    amplitude.with_values(out)
}

/// Result of [`build_adaptive_map`].
#[derive(Debug, Clone)]
pub struct AdaptiveMap {
    pub map: TransportMap,
    /// Largest change of the transported state at the final refinement.
    pub change: f64,
    pub n_seeds: usize,
}

/// Doubles the seed density until the transported and phased amplitude
/// `T(t) A e^{i S_rel / hbar}` moves by less than `tol` at every sample time.
pub fn build_adaptive_map(
    model: &HamiltonianModel,
    phase0: QuadraticPhase,
    x_window: (f64, f64),
    times: &[f64],
    amplitude: &WaveFunction,
    tol: f64,
    options: BundleOptions,
) -> Result<AdaptiveMap> {
    const MAX_SEEDS: usize = (1 << 14) + 1;
    let mut n = 65;
    let mut prev: Option<(TransportMap, Vec<WaveFunction>)> = None;
    loop {
        let bundle = build_bundle_with(model, phase0, x_window, n, times, options)?;
        let map = TransportMap::new(bundle)?;
        let states = times
            .iter()
            .map(|&t| phased_transport(&map, t, amplitude))
            .collect::<Result<Vec<_>>>()?;
        if let Some((_, old)) = &prev {
            let mut change: f64 = 0.0;
            for (a, b) in states.iter().zip(old) {
                change = change.max(a.distance(b)?);
            }
            if change < tol || n >= MAX_SEEDS {
                return Ok(AdaptiveMap { map, change, n_seeds: n });
            }
        }
        prev = Some((map, states));
        n = 2 * n - 1;
    }
}

fn phased_transport(map: &TransportMap, t: f64, amplitude: &WaveFunction) -> Result<WaveFunction> {
    let mut out = transport_operator(map, t, amplitude)?;
    let hbar = amplitude.hbar();
    let (lo, hi) = map.image(t)?;
    let xs: Vec<f64> = out.grid().points().collect();
    for (v, &y) in out.values_mut().iter_mut().zip(&xs) {
        if y >= lo && y <= hi {
            *v *= Complex64::from_polar(1.0, map.relative_phase(t, y)? / hbar);
        }
    }
    Ok(out)
}
