//! Transport of the Lagrangian manifold and of amplitudes along it.

mod bundle;
mod map;

pub use bundle::{
    build_bundle, build_bundle_with, caustic_free_window, BundleOptions, BundleSlice,
    TrajectoryBundle,
};
pub use map::{
    build_adaptive_map, curvature_matrix_A, evolved_phase, invert_transport, transport_operator,
    transport_operator_adjoint, AdaptiveMap, CentralState, TransportMap,
};
