//! Local polynomial interpolation kernels shared by the grid and transport code.

use std::ops::{Add, Mul};

/// Six-point Lagrange interpolation on a uniform lattice.
///
/// `f` is the fractional index. Nodes outside `0..values.len()` count as zero,
/// which matches amplitudes that vanish near the grid edges.
pub(crate) fn lagrange6<T>(values: &[T], f: f64) -> T
where
    T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
{
    let n = values.len() as isize;
    if !(f > -1.0 && f < n as f64) {
        return T::default();
    }
    let base = f.floor() as isize;
    let s = f - base as f64;
    if s == 0.0 && base >= 0 && base < n {
        return values[base as usize];
    }
    // nodes at offsets -2..=3 relative to base
    let offsets = [-2.0, -1.0, 0.0, 1.0, 2.0, 3.0];
    let mut acc = T::default();
    for (k, &ok) in offsets.iter().enumerate() {
        let idx = base + k as isize - 2;
        if idx < 0 || idx >= n {
            continue;
        }
        let mut w = 1.0;
        for (m, &om) in offsets.iter().enumerate() {
            if m != k {
                w *= (s - om) / (ok - om);
            }
        }
        acc = acc + values[idx as usize] * w;
    }
    acc
}

/// `k`-point Lagrange interpolation on a uniform lattice, with the stencil
/// shifted inward near the ends.
pub(crate) fn lagrange_clamped(values: &[f64], f: f64, k: usize) -> f64 {
    let n = values.len();
    let k = k.min(n);
    let f = f.clamp(0.0, (n - 1) as f64);
    let base = (f.floor() as usize).saturating_sub((k - 1) / 2).min(n - k);
    let s = f - base as f64;
    let mut acc = 0.0;
    for a in 0..k {
        let mut w = 1.0;
        for m in 0..k {
            if m != a {
                w *= (s - m as f64) / (a as f64 - m as f64);
            }
        }
        acc += values[base + a] * w;
    }
    acc
}

/// Cubic Hermite interpolant on `[0, h]` evaluated at local coordinate `u in [0, 1]`.
pub(crate) fn hermite3(y0: f64, y1: f64, d0: f64, d1: f64, h: f64, u: f64) -> f64 {
    let u2 = u * u;
    let u3 = u2 * u;
    let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
    let h10 = u3 - 2.0 * u2 + u;
    let h01 = -2.0 * u3 + 3.0 * u2;
    let h11 = u3 - u2;
    h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
}

/// Derivative (with respect to the physical coordinate) of [`hermite3`].
pub(crate) fn hermite3_derivative(y0: f64, y1: f64, d0: f64, d1: f64, h: f64, u: f64) -> f64 {
    let u2 = u * u;
    let dh00 = 6.0 * u2 - 6.0 * u;
    let dh10 = 3.0 * u2 - 4.0 * u + 1.0;
    let dh01 = -6.0 * u2 + 6.0 * u;
    let dh11 = 3.0 * u2 - 2.0 * u;
    (dh00 * y0 + dh01 * y1) / h + dh10 * d0 + dh11 * d1
}

/// Value, slope and curvature at one end of a quintic Hermite segment.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Jet {
    pub value: f64,
    pub slope: f64,
    pub curvature: f64,
}

/// Quintic Hermite interpolant between two jets a distance `h` apart.
pub(crate) fn hermite5(a: Jet, b: Jet, h: f64, u: f64) -> f64 {
    let u2 = u * u;
    let u3 = u2 * u;
    let u4 = u3 * u;
    let u5 = u4 * u;
    let h0 = 1.0 - 10.0 * u3 + 15.0 * u4 - 6.0 * u5;
    let h1 = u - 6.0 * u3 + 8.0 * u4 - 3.0 * u5;
    let h2 = 0.5 * (u2 - 3.0 * u3 + 3.0 * u4 - u5);
    let h5 = 10.0 * u3 - 15.0 * u4 + 6.0 * u5;
    let h4 = -4.0 * u3 + 7.0 * u4 - 3.0 * u5;
    let h3 = 0.5 * (u3 - 2.0 * u4 + u5);
    h0 * a.value
        + h1 * h * a.slope
        + h2 * h * h * a.curvature
        + h5 * b.value
        + h4 * h * b.slope
        + h3 * h * h * b.curvature
}
