//! One-dimensional semiclassical wave-packet propagation.

pub mod classical;
pub mod error;
pub mod experiment;
mod interp;
pub mod metaplectic;
pub mod models;
pub mod phase_space;
pub mod quantum;
pub mod transport;

pub use error::{Error, Result};
pub use num_complex::Complex64;
