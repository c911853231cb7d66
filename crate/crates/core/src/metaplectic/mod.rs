//! The scaling operator, the metaplectic correction, the extended WKB
//! propagator and the thawed Gaussian baseline.

mod kernel;
mod profile;
mod thawed;
mod wkb;

pub use kernel::{accumulate_kernel, apply_metaplectic, MetaplecticKernel};
pub use profile::{apply_l, apply_l_adjoint, profile_norm, Profile, MIN_POINTS_PER_WIDTH};
pub use thawed::{propagate_thawed_gaussian, ThawedState};
pub use wkb::{
    backward_wkb_test, propagate_extended_wkb, BackwardTest, ExtendedWkb, WkbMetadata, WkbOptions,
    WkbState,
};
