use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::{apply_metaplectic, kernel_along, MetaplecticKernel};
use super::profile::{apply_l, apply_l_adjoint, Profile};
use crate::classical::flow;
use crate::error::{Error, Result};
use crate::models::{HamiltonianModel, QuadraticPhase};
use crate::phase_space::{GridSpec, WaveFunction};
use crate::quantum::exact_propagate;
use crate::transport::{
    build_adaptive_map, caustic_free_window, transport_operator, transport_operator_adjoint,
    BundleOptions, TransportMap,
};

/// Tolerances of the extended WKB pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WkbOptions {
    pub bundle: BundleOptions,
    /// Seed density is doubled until the transported state moves less than this.
    pub refine_tol: f64,
    /// The seeded window is trimmed to trajectories keeping `phi'` above this.
    pub edge_floor: f64,
    /// Largest amplitude mass allowed outside the trimmed window.
    pub max_deficit: f64,
    /// Tail mass ignored when sizing the window.
    pub tail: f64,
    pub quadrature_dt: f64,
    /// Largest mass allowed in the outer 2% of the grid at either end.
    pub boundary_tol: f64,
}

impl Default for WkbOptions {
    fn default() -> Self {
        Self {
            bundle: BundleOptions::default(),
            refine_tol: 1e-8,
            edge_floor: 1e-3,
            max_deficit: 1e-5,
            tail: 1e-18,
            quadrature_dt: 0.05,
            boundary_tol: 1e-10,
        }
    }
}

/// Diagnostics attached to every propagated state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WkbMetadata {
    pub t: f64,
    pub c_t: f64,
    /// Smallest `phi'` over the bundle (the non-contraction constant).
    pub non_contraction: f64,
    /// Distance of that minimum from the caustic threshold.
    pub caustic_margin: f64,
    pub window: (f64, f64),
    pub mass_deficit: f64,
    pub boundary_mass: f64,
    pub norm: f64,
    /// `sqrt(hbar) phi'(t, q)`.
    pub sqrt_hbar_dphi: f64,
    /// `sqrt(hbar) |dPhi^t|` along the central trajectory.
    pub ehrenfest_indicator: f64,
    /// `sqrt(hbar) (1 + max_s |d_x A(s, q)| sqrt(hbar))`.
    pub remainder_diagnostic: f64,
    /// `arg (1 + i C_t)^{-1/2}`, tracked from 0 at `t = 0`.
    pub kernel_phase: f64,
    pub n_seeds: usize,
}

#[derive(Debug, Clone)]
pub struct WkbState {
    pub psi: WaveFunction,
    pub meta: WkbMetadata,
}

/// Exact and semiclassical amplitudes pulled back to the initial manifold.
#[derive(Debug, Clone)]
pub struct BackwardTest {
    pub t: f64,
    /// `T(t)^* [psi_exact(t) e^{-i S(t) / hbar}]`.
    pub exact_amplitude: WaveFunction,
    /// `M_q(t) L_q a`.
    pub metaplectic_amplitude: WaveFunction,
    pub exact_profile: Profile,
    pub metaplectic_profile: Profile,
    /// `|exact - metaplectic| / |L_q a|`.
    pub l2_distance: f64,
    /// Largest `||exact| - |metaplectic||` over points above 10% of the peak, relative to the peak.
    pub amplitude_deviation: f64,
}

/// Shared setup for propagating one initial state to several times.
#[derive(Debug, Clone)]
pub struct ExtendedWkb {
    model: HamiltonianModel,
    phase0: QuadraticPhase,
    hbar: f64,
    a0: WaveFunction,
    times: Vec<f64>,
    kernels: Vec<f64>,
    map: Option<TransportMap>,
    window: (f64, f64),
    n_seeds: usize,
    options: WkbOptions,
}

/// Interval outside which `psi` carries at most `tail` of its mass.
fn mass_interval(psi: &WaveFunction, tail: f64) -> (f64, f64) {
    let dx = psi.grid().dx();
    let total = psi.norm_sqr();
    let dens = psi.density();
    let mut acc = 0.0;
    let mut lo = 0;
    while lo + 1 < dens.len() && acc + dens[lo] * dx <= 0.5 * tail * total {
        acc += dens[lo] * dx;
        lo += 1;
    }
    acc = 0.0;
    let mut hi = dens.len() - 1;
    while hi > lo && acc + dens[hi] * dx <= 0.5 * tail * total {
        acc += dens[hi] * dx;
        hi -= 1;
    }
    (psi.grid().point(lo), psi.grid().point(hi))
}

impl ExtendedWkb {
    pub fn prepare(
        model: &HamiltonianModel,
        phase0: QuadraticPhase,
        profile: &Profile,
        hbar: f64,
        grid: GridSpec,
        times: &[f64],
        options: WkbOptions,
    ) -> Result<Self> {
        if times.is_empty() || times.iter().any(|t| !(*t >= 0.0)) || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter(format!(
                "times must be non-negative and strictly increasing: {times:?}"
            )));
        }
        let a0 = apply_l(profile, phase0.q0, hbar, grid)?;
        let kernels = times
            .iter()
            .map(|&t| kernel_along(model, phase0, phase0.q0, t, options.quadrature_dt, options.bundle))
            .collect::<Result<Vec<_>>>()?;
        let t_max = *times.last().unwrap();
        let c_max = *kernels.last().unwrap();
        let spread = apply_metaplectic(
            &MetaplecticKernel {
                c_t: c_max,
                q_center: phase0.q0,
                hbar,
            },
            &a0,
        )?;
        let (lo, hi) = mass_interval(&spread, options.tail);
        let pad = 2.0 * hbar.sqrt();
        let mut window = (lo - pad, hi + pad);
        if t_max == 0.0 {
            return Ok(Self {
                model: model.clone(),
                phase0,
                hbar,
                a0,
                times: times.to_vec(),
                kernels,
                map: None,
                window,
                n_seeds: 0,
                options,
            });
        }
        window = caustic_free_window(model, phase0, window, t_max, options.edge_floor, &options.bundle)?;
        let positive: Vec<f64> = times.iter().cloned().filter(|&t| t > 0.0).collect();
        let adaptive = build_adaptive_map(
            model,
            phase0,
            window,
            &positive,
            &spread,
            options.refine_tol,
            options.bundle,
        )?;
        let deficit = adaptive.map.mass_deficit(&spread);
        if deficit > options.max_deficit {
            return Err(Error::Truncated {
                lo: window.0,
                hi: window.1,
                mass: deficit,
            });
        }
        Ok(Self {
            model: model.clone(),
            phase0,
            hbar,
            a0,
            times: times.to_vec(),
            kernels,
            map: Some(adaptive.map),
            window,
            n_seeds: adaptive.n_seeds,
            options,
        })
    }

    pub fn map(&self) -> Option<&TransportMap> {
        self.map.as_ref()
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// `A_0 = L_q a`.
    pub fn initial_amplitude(&self) -> &WaveFunction {
        &self.a0
    }

    /// `A_0 e^{i S_0 / hbar}`.
    pub fn initial_state(&self) -> WaveFunction {
        let mut psi = self.a0.clone();
        let ph = self.phase0;
        let hbar = self.hbar;
        psi.multiply_by(|x| Complex64::from_polar(1.0, ph.s0(x) / hbar));
        psi
    }

    fn index(&self, t: f64) -> Result<usize> {
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= 1e-12 * (1.0 + t.abs()))
            .ok_or_else(|| Error::InvalidParameter(format!("time {t} was not prepared")))
    }

    pub fn kernel(&self, t: f64) -> Result<MetaplecticKernel> {
        Ok(MetaplecticKernel {
            c_t: self.kernels[self.index(t)?],
            q_center: self.phase0.q0,
            hbar: self.hbar,
        })
    }

    /// `M_q(t) L_q a`.
    pub fn metaplectic_amplitude(&self, t: f64) -> Result<WaveFunction> {
        apply_metaplectic(&self.kernel(t)?, &self.a0)
    }

    /// `[T(t) M_q(t) L_q a] e^{i S(t) / hbar}` with diagnostics.
    pub fn state(&self, t: f64) -> Result<WkbState> {
        let kernel = self.kernel(t)?;
        let sqrt_h = self.hbar.sqrt();
        let Some(map) = self.map.as_ref().filter(|_| t > 0.0) else {
            let psi = self.initial_state();
            let meta = WkbMetadata {
                t,
                c_t: 0.0,
                non_contraction: 1.0,
                caustic_margin: 1.0 - self.options.bundle.caustic_threshold,
                window: self.window,
                mass_deficit: 0.0,
                boundary_mass: psi.boundary_mass(0.02),
                norm: psi.norm(),
                sqrt_hbar_dphi: sqrt_h,
                ehrenfest_indicator: sqrt_h,
                remainder_diagnostic: sqrt_h,
                kernel_phase: 0.0,
                n_seeds: self.n_seeds,
            };
            return Ok(WkbState { psi, meta });
        };
        let b = apply_metaplectic(&kernel, &self.a0)?;
        let deficit = map.mass_deficit(&b);
        let mut psi = transport_operator(map, t, &b)?;
        let central = map.central(t)?;
        let (lo, hi) = map.image(t)?;
        let xs: Vec<f64> = psi.grid().points().collect();
        let hbar = self.hbar;
        let phases: Vec<Option<f64>> = xs
            .par_iter()
            .map(|&y| {
                if y >= lo && y <= hi {
                    map.relative_phase(t, y).ok()
                } else {
                    None
                }
            })
            .collect();
        let global = Complex64::from_polar(1.0, central.action / hbar);
        for (v, s) in psi.values_mut().iter_mut().zip(phases) {
            *v = match s {
                Some(s) => *v * global * Complex64::from_polar(1.0, s / hbar),
                None => Complex64::new(0.0, 0.0),
            };
        }
        let boundary = psi.boundary_mass(0.02);
        if boundary > self.options.boundary_tol {
            return Err(Error::BoundaryMass { mass: boundary });
        }
        let tangent = flow(&self.model, self.phase0.center(), t, self.options.bundle.dt_max)?.tangent;
        let meta = WkbMetadata {
            t,
            c_t: kernel.c_t,
            non_contraction: map.non_contraction(),
            caustic_margin: map.non_contraction() - self.options.bundle.caustic_threshold,
            window: self.window,
            mass_deficit: deficit,
            boundary_mass: boundary,
            norm: psi.norm(),
            sqrt_hbar_dphi: sqrt_h * central.dphi,
            ehrenfest_indicator: sqrt_h * tangent.spectral_norm(),
            remainder_diagnostic: sqrt_h * (1.0 + self.curvature_gradient(t)? * sqrt_h),
            kernel_phase: kernel.gaussian_prefactor().arg(),
            n_seeds: self.n_seeds,
        };
        Ok(WkbState { psi, meta })
    }

    /// All prepared times, evaluated in parallel.
    pub fn states(&self) -> Result<Vec<WkbState>> {
        self.times.par_iter().map(|&t| self.state(t)).collect()
    }

    /// `max_s |d_x A(s, x)|` at the centre over `[0, t]`, by central differences.
    fn curvature_gradient(&self, t: f64) -> Result<f64> {
        let h = 1e-4 * self.hbar.sqrt().max(1e-3);
        let q0 = self.phase0.q0;
        let dt_max = self.options.bundle.dt_max;
        let steps = (t / self.options.quadrature_dt).ceil().max(1.0) as usize;
        let curv = |s: f64, x: f64| -> Result<f64> {
            let f = flow(&self.model, self.phase0.point(x), s, dt_max)?;
            let d = f.tangent.qp() * self.phase0.alpha + f.tangent.qq();
            Ok(self.model.kinetic_d2(f.end_point.p) / (d * d))
        };
        let mut worst: f64 = 0.0;
        for i in 0..=steps {
            let s = t * i as f64 / steps as f64;
            worst = worst.max(((curv(s, q0 + h)? - curv(s, q0 - h)?) / (2.0 * h)).abs());
        }
        Ok(worst)
    }

    /// Pulls an exact state at time `t` back to the initial manifold and
    /// compares it with `M_q(t) L_q a`.
    pub fn backward_test(&self, t: f64, exact: &WaveFunction) -> Result<BackwardTest> {
        exact.check_compatible(&self.a0)?;
        let meta_amp = self.metaplectic_amplitude(t)?;
        let exact_amp = match self.map.as_ref().filter(|_| t > 0.0) {
            None => {
                let mut a = exact.clone();
                let ph = self.phase0;
                let hbar = self.hbar;
                a.multiply_by(|x| Complex64::from_polar(1.0, -ph.s0(x) / hbar));
                a
            }
            Some(map) => {
                let (lo, hi) = map.image(t)?;
                let central = map.central(t)?;
                let hbar = self.hbar;
                let xs: Vec<f64> = exact.grid().points().collect();
                let values: Vec<Complex64> = xs
                    .par_iter()
                    .zip(exact.values())
                    .map(|(&y, v)| {
                        if y >= lo && y <= hi {
                            let s = central.action + map.relative_phase(t, y).unwrap_or(0.0);
                            v * Complex64::from_polar(1.0, -s / hbar)
                        } else {
                            Complex64::new(0.0, 0.0)
                        }
                    })
                    .collect();
                transport_operator_adjoint(map, t, &exact.with_values(values)?)?
            }
        };
        let l2_distance = exact_amp.distance(&meta_amp)? / self.a0.norm();
        let peak = meta_amp.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
        let amplitude_deviation = exact_amp
            .values()
            .iter()
            .zip(meta_amp.values())
            .filter(|(_, m)| m.norm() > 0.1 * peak)
            .map(|(e, m)| (e.norm() - m.norm()).abs() / peak)
            .fold(0.0, f64::max);
        let sqrt_h = self.hbar.sqrt();
        let reach = (self.window.0 - self.phase0.q0).abs().max((self.window.1 - self.phase0.q0).abs()) / sqrt_h;
        let ug = GridSpec::symmetric(reach.ceil().max(1.0), 1024)?;
        Ok(BackwardTest {
            t,
            exact_profile: apply_l_adjoint(&exact_amp, self.phase0.q0, ug)?,
            metaplectic_profile: apply_l_adjoint(&meta_amp, self.phase0.q0, ug)?,
            exact_amplitude: exact_amp,
            metaplectic_amplitude: meta_amp,
            l2_distance,
            amplitude_deviation,
        })
    }
}

/// `psi(t) = [T(t) M_q(t) L_q a] e^{i S(t) / hbar}`.
pub fn propagate_extended_wkb(
    model: &HamiltonianModel,
    phase0: QuadraticPhase,
    profile: &Profile,
    hbar: f64,
    t: f64,
    grid: GridSpec,
) -> Result<WkbState> {
    ExtendedWkb::prepare(model, phase0, profile, hbar, grid, &[t], WkbOptions::default())?.state(t)
}

/// Exact propagation of `L_q a e^{i S_0 / hbar}` followed by the pull-back
/// comparison of [`ExtendedWkb::backward_test`].
pub fn backward_wkb_test(
    model: &HamiltonianModel,
    phase0: QuadraticPhase,
    profile: &Profile,
    hbar: f64,
    t: f64,
    grid: GridSpec,
) -> Result<BackwardTest> {
    let wkb = ExtendedWkb::prepare(model, phase0, profile, hbar, grid, &[t], WkbOptions::default())?;
    let exact = exact_propagate(model, &wkb.initial_state(), t)?;
    wkb.backward_test(t, &exact)
}
