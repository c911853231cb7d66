//! Grids, sampled wavefunctions, the hbar-scaled Fourier transform and the
//! Wigner function.

mod fourier;
mod grid;
mod io;
mod tangent;
mod wavefunction;
mod wigner;

pub use fourier::{
    hbar_fourier_transform, inverse_hbar_fourier_transform, Direction, MomentumWaveFunction,
    SpectralPlan,
};
pub use grid::{next_power_of_two, GridSpec};
pub use tangent::TangentMatrix;
pub use io::{read_wavefunction_csv, read_wigner_csv, write_wavefunction_csv, write_wigner_csv};
pub use wavefunction::{overlap, PhasePoint, WaveFunction};
pub use wigner::{wigner_function, WignerField, WignerOptions};

/// Applies the transform in the requested direction. The inverse expects the
/// input on the centred conjugate grid of `position_grid`.
pub fn hbar_fourier(
    psi: &WaveFunction,
    direction: Direction,
    position_grid: GridSpec,
) -> crate::error::Result<WaveFunction> {
    match direction {
        Direction::Forward => {
            let m = hbar_fourier_transform(psi);
            WaveFunction::new(m.grid, m.values, m.hbar)
        }
        Direction::Inverse => inverse_hbar_fourier_transform(&MomentumWaveFunction {
            grid: *psi.grid(),
            position_grid,
            values: psi.values().to_vec(),
            hbar: psi.hbar(),
        }),
    }
}
