use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::classical::{flow_between, FlowResult};
use crate::error::{Error, Result};
use crate::models::{HamiltonianModel, QuadraticPhase};
use crate::phase_space::{SpectralPlan, WaveFunction};
use crate::transport::{BundleOptions, TransportMap};

/// The Fourier multiplier `e^{-i C_t xi^2 / (2 hbar)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetaplecticKernel {
    pub c_t: f64,
    pub q_center: f64,
    pub hbar: f64,
}

impl MetaplecticKernel {
    /// `(1 + i C_t)^{-1/2}` on the principal branch, which is continuous for `C_t >= 0`.
    pub fn gaussian_prefactor(&self) -> Complex64 {
        Complex64::new(1.0, self.c_t).sqrt().inv()
    }
}

const KERNEL_TOL: f64 = 1e-9;

/// `A(s) = H_pp / phi'(s, q)^2` along the trajectory from `q` on the initial manifold.
struct CurvatureAlong<'a> {
    model: &'a HamiltonianModel,
    phase0: QuadraticPhase,
    q: f64,
    options: BundleOptions,
}

impl CurvatureAlong<'_> {
    fn at(&self, s: f64) -> Result<f64> {
        let f: FlowResult = flow_between(self.model, self.phase0.point(self.q), 0.0, s, self.options.dt_max)?;
        let d = f.tangent.qp() * self.phase0.alpha + f.tangent.qq();
        if !(d >= self.options.caustic_threshold) {
            return Err(Error::Caustic {
                t: s,
                x: self.q,
                derivative: d,
            });
        }
        Ok(self.model.kinetic_d2(f.end_point.p) / (d * d))
    }

    fn simpson(&self, a: f64, b: f64, fa: f64, fm: f64, fb: f64, tol: f64, depth: u32) -> Result<f64> {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let flm = self.at(lm)?;
        let frm = self.at(rm)?;
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let err = left + right - whole;
        if depth == 0 || err.abs() <= 15.0 * tol {
            return Ok(left + right + err / 15.0);
        }
        Ok(self.simpson(a, m, fa, flm, fm, 0.5 * tol, depth - 1)?
            + self.simpson(m, b, fm, frm, fb, 0.5 * tol, depth - 1)?)
    }
}

/// `C_t = int_0^t A(s, q) ds` by adaptive Simpson quadrature on panels no
/// longer than `quadrature_dt`, with panel edges at kick times.
pub fn accumulate_kernel(
    map: &TransportMap,
    q: f64,
    t: f64,
    quadrature_dt: f64,
    hbar: f64,
) -> Result<MetaplecticKernel> {
    kernel_along(map.model(), map.phase0(), q, t, quadrature_dt, map.bundle().options()).map(|c_t| MetaplecticKernel {
        c_t,
        q_center: q,
        hbar,
    })
}

pub(crate) fn kernel_along(
    model: &HamiltonianModel,
    phase0: QuadraticPhase,
    q: f64,
    t: f64,
    quadrature_dt: f64,
    options: BundleOptions,
) -> Result<f64> {
    if t < 0.0 || !(quadrature_dt > 0.0) {
        return Err(Error::InvalidParameter(format!("kernel over [0, {t}] with panels {quadrature_dt}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let f = CurvatureAlong {
        model,
        phase0,
        q,
        options,
    };
    let mut edges = vec![0.0];
    let mut s = 0.0;
    while s < t {
        let mut next = (s + quadrature_dt).min(t);
        if model.is_kicked() && next > s.floor() + 1.0 {
            next = s.floor() + 1.0;
        }
        edges.push(next);
        s = next;
    }
    let panels = (edges.len() - 1) as f64;
    let mut total = 0.0;
    let mut fa = f.at(0.0)?;
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        let fm = f.at(0.5 * (a + b))?;
        let fb = f.at(b)?;
        total += f.simpson(a, b, fa, fm, fb, KERNEL_TOL / panels, 30)?;
        fa = fb;
    }
    Ok(total)
}

/// Largest tolerated fraction of momentum mass in the outer 5% of the band.
const BAND_EDGE_TOL: f64 = 1e-10;

/// `(M A)` as the multiplier `e^{-i C_t xi^2 / (2 hbar)}` on the transform of `A`.
pub fn apply_metaplectic(kernel: &MetaplecticKernel, amplitude: &WaveFunction) -> Result<WaveFunction> {
    let hbar = amplitude.hbar();
    let plan = SpectralPlan::new(*amplitude.grid(), hbar);
    let edge = plan.momentum_edge_mass(amplitude.values(), 0.95);
    if edge > BAND_EDGE_TOL {
        return Err(Error::Bandwidth(format!(
            "amplitude has {edge:e} of its momentum mass at the band edge"
        )));
    }
    if kernel.c_t == 0.0 {
        return Ok(amplitude.clone());
    }
    let c = kernel.c_t;
    let mult = plan.multiplier(|xi| Complex64::from_polar(1.0, -0.5 * c * xi * xi / hbar));
    let mut values = amplitude.values().to_vec();
    plan.apply_multiplier(&mut values, &mult);
    amplitude.with_values(values)
}
