//! Hamiltonian flows with their tangent maps and actions, hyperbolic
//! splittings, and linear symplectic shears.

mod flow;
mod lines;
mod stability;

pub use flow::{flow, flow_between, kick, FlowResult, DEFAULT_DT_MAX};
pub use lines::{
    pulled_back_vertical, shear_from_lagrangians, shear_p_pq, symplectic_form, LagrangianLine,
};
pub use stability::{
    ehrenfest_time, hyperbolic_splitting, hyperbolic_subspaces, lyapunov_exponent,
    HyperbolicSplitting,
};
