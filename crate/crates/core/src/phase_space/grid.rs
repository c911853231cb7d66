use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform, periodic position grid `x_j = x_min + j dx`, `j = 0..n_points`.
///
/// The right end `x_max` is not a sample point; it is identified with `x_min`
/// for transform purposes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid", into = "RawGrid")]
pub struct GridSpec {
    x_min: f64,
    x_max: f64,
    n_points: usize,
}

#[derive(Serialize, Deserialize)]
struct RawGrid {
    x_min: f64,
    x_max: f64,
    n_points: usize,
}

impl TryFrom<RawGrid> for GridSpec {
    type Error = Error;

    fn try_from(raw: RawGrid) -> Result<Self> {
        GridSpec::new(raw.x_min, raw.x_max, raw.n_points)
    }
}

impl From<GridSpec> for RawGrid {
    fn from(g: GridSpec) -> Self {
        RawGrid {
            x_min: g.x_min,
            x_max: g.x_max,
            n_points: g.n_points,
        }
    }
}

impl GridSpec {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) || x_max <= x_min {
            return Err(Error::InvalidGrid(format!(
                "need finite x_max > x_min, got [{x_min}, {x_max}]"
            )));
        }
        if n_points < 2 || !n_points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n_points must be a power of two >= 2, got {n_points}"
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            n_points,
        })
    }

    /// Symmetric grid `[-half_width, half_width)`.
    pub fn symmetric(half_width: f64, n_points: usize) -> Result<Self> {
        Self::new(-half_width, half_width, n_points)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn dx(&self) -> f64 {
        self.length() / self.n_points as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        let dx = self.dx();
        (0..self.n_points).map(move |i| self.x_min + i as f64 * dx)
    }

    /// Spacing of the conjugate momentum grid, `2 pi hbar / L`.
    pub fn momentum_spacing(&self, hbar: f64) -> f64 {
        2.0 * PI * hbar / self.length()
    }

    /// Largest momentum representable on the grid, `pi hbar / dx`.
    pub fn nyquist_momentum(&self, hbar: f64) -> f64 {
        PI * hbar / self.dx()
    }

    /// Conjugate momenta in FFT storage order (0, 1, .., N/2-1, -N/2, .., -1).
    pub fn momenta_fft_order(&self, hbar: f64) -> Vec<f64> {
        let n = self.n_points as isize;
        let dxi = self.momentum_spacing(hbar);
        (0..n)
            .map(|k| if k < n / 2 { k } else { k - n })
            .map(|k| k as f64 * dxi)
            .collect()
    }

    /// The centred conjugate grid `xi_k = k * 2 pi hbar / L`, `k = -N/2..N/2`.
    pub fn momentum_grid(&self, hbar: f64) -> GridSpec {
        let dxi = self.momentum_spacing(hbar);
        let half = (self.n_points / 2) as f64;
        GridSpec {
            x_min: -half * dxi,
            x_max: half * dxi,
            n_points: self.n_points,
        }
    }

    /// Fails when the grid cannot carry momenta up to `p_required`.
    pub fn check_bandwidth(&self, hbar: f64, p_required: f64) -> Result<()> {
        let nyquist = self.nyquist_momentum(hbar);
        if p_required > nyquist {
            return Err(Error::Bandwidth(format!(
                "requested momentum {p_required} exceeds Nyquist momentum {nyquist}"
            )));
        }
        Ok(())
    }

    /// Same interval, twice the points.
    pub fn refined(&self) -> GridSpec {
        GridSpec {
            n_points: self.n_points * 2,
            ..*self
        }
    }

    /// Twice the interval about the same centre, same spacing.
    pub fn widened(&self) -> GridSpec {
        let c = 0.5 * (self.x_min + self.x_max);
        let h = self.length();
        GridSpec {
            x_min: c - h,
            x_max: c + h,
            n_points: self.n_points * 2,
        }
    }

    /// Fractional index of `x` (may fall outside `0..n`).
    pub(crate) fn fractional_index(&self, x: f64) -> f64 {
        (x - self.x_min) / self.dx()
    }

    pub(crate) fn same_as(&self, other: &GridSpec) -> bool {
        self.n_points == other.n_points
            && (self.x_min - other.x_min).abs() <= 1e-12 * (1.0 + self.x_min.abs())
            && (self.x_max - other.x_max).abs() <= 1e-12 * (1.0 + self.x_max.abs())
    }
}

/// Smallest power of two that is at least `n` (and at least 2).
pub fn next_power_of_two(n: usize) -> usize {
    n.max(2).next_power_of_two()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::new(0.0, 1.0, 100).is_err());
        assert!(GridSpec::new(1.0, 0.0, 64).is_err());
        assert!(GridSpec::new(0.0, 1.0, 1).is_err());
        assert!(GridSpec::new(f64::NAN, 1.0, 64).is_err());
        assert!(GridSpec::new(-1.0, 1.0, 2).is_ok());
    }

    #[test]
    fn spacing_and_conjugate_grid() {
        let g = GridSpec::new(-4.0, 4.0, 256).unwrap();
        assert_eq!(g.dx(), 8.0 / 256.0);
        assert_eq!(g.point(128), 0.0);
        let hbar = 0.1;
        let xi = g.momenta_fft_order(hbar);
        assert_eq!(xi[0], 0.0);
        assert!((xi[128] + g.nyquist_momentum(hbar)).abs() < 1e-12);
        let pg = g.momentum_grid(hbar);
        assert!((pg.dx() - g.momentum_spacing(hbar)).abs() < 1e-15);
        assert!(g.check_bandwidth(hbar, 0.9 * g.nyquist_momentum(hbar)).is_ok());
        assert!(matches!(
            g.check_bandwidth(hbar, 1.1 * g.nyquist_momentum(hbar)),
            Err(Error::Bandwidth(_))
        ));
    }

    #[test]
    fn widen_keeps_spacing() {
        let g = GridSpec::new(-1.0, 3.0, 64).unwrap();
        let w = g.widened();
        assert_eq!(w.dx(), g.dx());
        assert_eq!(w.x_min(), -3.0);
        assert_eq!(w.refined().dx(), g.dx() / 2.0);
    }

    #[test]
    fn serde_validates() {
        let bad = r#"{"x_min":0.0,"x_max":1.0,"n_points":3}"#;
        assert!(serde_json::from_str::<GridSpec>(bad).is_err());
        let good = r#"{"x_min":0.0,"x_max":1.0,"n_points":4}"#;
        assert_eq!(
            serde_json::from_str::<GridSpec>(good).unwrap(),
            GridSpec::new(0.0, 1.0, 4).unwrap()
        );
    }
}
