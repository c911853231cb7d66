use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::lagrange6;
use crate::phase_space::{GridSpec, WaveFunction};

/// Shape `a(u)` of an amplitude in the scaled variable `u = (x - q) / sqrt(hbar)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    /// `(Im b / pi)^{1/4} e^{i b u^2 / 2}`.
    Gaussian { b_re: f64, b_im: f64 },
    /// Samples on a uniform `u` grid, zero outside it.
    Sampled { grid: GridSpec, values: Vec<Complex64> },
}

impl Profile {
    /// The standard ground-state profile `pi^{-1/4} e^{-u^2/2}`.
    pub fn ground() -> Self {
        Self::gaussian(Complex64::i()).expect("Im i > 0")
    }

    pub fn gaussian(b: Complex64) -> Result<Self> {
        if !(b.im > 0.0) {
            return Err(Error::InvalidParameter(format!("Gaussian width needs Im b > 0, got {b}")));
        }
        Ok(Self::Gaussian { b_re: b.re, b_im: b.im })
    }

    pub fn sampled(grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::IncompatibleGrid("profile samples do not match the grid".into()));
        }
        Ok(Self::Sampled { grid, values })
    }

    /// Multiplies by `e^{i delta u^2 / 2}`, which moves a slope `delta` of the
    /// phase into the profile.
    pub fn chirped(&self, delta: f64) -> Self {
        match self {
            Self::Gaussian { b_re, b_im } => Self::Gaussian {
                b_re: b_re + delta,
                b_im: *b_im,
            },
            Self::Sampled { grid, values } => Self::Sampled {
                grid: *grid,
                values: grid
                    .points()
                    .zip(values)
                    .map(|(u, v)| v * Complex64::from_polar(1.0, 0.5 * delta * u * u))
                    .collect(),
            },
        }
    }

    pub fn width_parameter(&self) -> Option<Complex64> {
        match self {
            Self::Gaussian { b_re, b_im } => Some(Complex64::new(*b_re, *b_im)),
            Self::Sampled { .. } => None,
        }
    }

    pub fn eval(&self, u: f64) -> Complex64 {
        match self {
            Self::Gaussian { b_re, b_im } => {
                let b = Complex64::new(*b_re, *b_im);
                (b_im / PI).powf(0.25) * (Complex64::i() * b * u * u * 0.5).exp()
            }
            Self::Sampled { grid, values } => lagrange6(values, grid.fractional_index(u)),
        }
    }

    /// Half-width in `u` outside which `|a|^2` carries less than `tail` of the mass.
    pub fn support_radius(&self, tail: f64) -> f64 {
        match self {
            Self::Gaussian { b_im, .. } => {
                // erfc(r sqrt(Im b)) <= e^{-r^2 Im b}
                ((1.0 / tail).ln() / b_im).sqrt()
            }
            Self::Sampled { grid, values } => {
                let total: f64 = values.iter().map(|v| v.norm_sqr()).sum();
                let mut best: f64 = 0.0;
                let mut outside = 0.0;
                // walk inward from both ends together
                let n = values.len();
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|&a, &b| {
                    grid.point(b).abs().total_cmp(&grid.point(a).abs())
                });
                for i in order {
                    outside += values[i].norm_sqr();
                    if outside > tail * total {
                        best = grid.point(i).abs();
                        break;
                    }
                }
                best
            }
        }
    }
}

/// Minimum number of grid points across one `sqrt(hbar)`.
pub const MIN_POINTS_PER_WIDTH: f64 = 8.0;

/// `(L_q a)(x) = hbar^{-1/4} a((x - q) / sqrt(hbar))`.
pub fn apply_l(profile: &Profile, q: f64, hbar: f64, grid: GridSpec) -> Result<WaveFunction> {
    let s = hbar.sqrt();
    if s / grid.dx() < MIN_POINTS_PER_WIDTH {
        return Err(Error::Bandwidth(format!(
            "grid spacing {} resolves sqrt(hbar) = {s} with fewer than {MIN_POINTS_PER_WIDTH} points",
            grid.dx()
        )));
    }
    let scale = hbar.powf(-0.25);
    Ok(WaveFunction::from_fn(grid, hbar, |x| profile.eval((x - q) / s) * scale))
}

/// `(L_q^* A)(u) = hbar^{1/4} A(q + sqrt(hbar) u)` sampled on `profile_grid`.
pub fn apply_l_adjoint(amplitude: &WaveFunction, q: f64, profile_grid: GridSpec) -> Result<Profile> {
    let hbar = amplitude.hbar();
    let s = hbar.sqrt();
    let scale = hbar.powf(0.25);
    let values = profile_grid
        .points()
        .map(|u| amplitude.interpolate(q + s * u) * scale)
        .collect();
    Profile::sampled(profile_grid, values)
}

/// `sum |a|^2 du` of a sampled profile.
pub fn profile_norm(profile: &Profile) -> f64 {
    match profile {
        Profile::Gaussian { .. } => 1.0,
        Profile::Sampled { grid, values } => {
            (values.iter().map(|v| v.norm_sqr()).sum::<f64>() * grid.dx()).sqrt()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ground_profile_gives_the_coherent_amplitude() {
        let hbar = 0.01;
        let grid = GridSpec::symmetric(2.0, 2048).unwrap();
        let a = apply_l(&Profile::ground(), 0.0, hbar, grid).unwrap();
        for (x, v) in grid.points().zip(a.values()) {
            let expect = (PI * hbar).powf(-0.25) * (-x * x / (2.0 * hbar)).exp();
            assert!((v - expect).norm() < 1e-12);
        }
        assert!((a.norm() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn unit_hbar_is_identity_and_adjoint_inverts() {
        let grid = GridSpec::symmetric(10.0, 1024).unwrap();
        let prof = Profile::gaussian(Complex64::new(0.4, 1.3)).unwrap();
        let a = apply_l(&prof, 0.0, 1.0, grid).unwrap();
        for (u, v) in grid.points().zip(a.values()) {
            assert!((v - prof.eval(u)).norm() < 1e-15);
        }
        let hbar = 0.003;
        let xg = GridSpec::symmetric(1.5, 8192).unwrap();
        let ug = GridSpec::symmetric(10.0, 1024).unwrap();
        let sampled = Profile::sampled(ug, ug.points().map(|u| prof.eval(u)).collect()).unwrap();
        let amp = apply_l(&sampled, 0.2, hbar, xg).unwrap();
        assert!((amp.norm() - profile_norm(&sampled)).abs() < 1e-8);
        let back = apply_l_adjoint(&amp, 0.2, ug).unwrap();
        let (Profile::Sampled { values: v0, .. }, Profile::Sampled { values: v1, .. }) = (&sampled, &back) else {
            unreachable!()
        };
        let err = v0.iter().zip(v1).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt() * ug.dx().sqrt();
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn under_resolution_is_rejected() {
        let grid = GridSpec::symmetric(8.0, 512).unwrap();
        assert!(matches!(
            apply_l(&Profile::ground(), 0.0, 0.0008, grid),
            Err(Error::Bandwidth(_))
        ));
        assert!(Profile::gaussian(Complex64::new(1.0, -1.0)).is_err());
    }
}
