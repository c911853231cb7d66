use thiserror::Error;

/// Errors raised anywhere in the propagation toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("bandwidth exceeded: {0}")]
    Bandwidth(String),

    #[error("incompatible grids: {0}")]
    IncompatibleGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("caustic at t = {t}, x = {x} (phi' = {derivative:e})")]
    Caustic { t: f64, x: f64, derivative: f64 },

    #[error("outside the caustic-free domain of the closed form: {0}")]
    CausticDomain(String),

    #[error("position {y} lies outside the transported image [{lo}, {hi}]")]
    OutOfDomain { y: f64, lo: f64, hi: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("fixed point is not hyperbolic (trace of period map = {trace})")]
    NotHyperbolic { trace: f64 },

    #[error("point is not a fixed point of the period map (displacement {displacement:e})")]
    NotFixedPoint { displacement: f64 },

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("time step too large: {0}")]
    StepTooLarge(String),

    #[error("caustic-free window [{lo}, {hi}] leaves amplitude mass {mass:e} outside")]
    Truncated { lo: f64, hi: f64, mass: f64 },

    #[error("amplitude reached the grid boundary (mass {mass:e})")]
    BoundaryMass { mass: f64 },

    #[error("square-root branch discontinuity at t = {t}")]
    Branch { t: f64 },

    #[error("io: {0}")]
    Io(String),

    #[error("parse: {0}")]
    Parse(String),

    #[error("experiment stage `{stage}` failed: {inner}")]
    Stage { stage: String, inner: Box<Error> },
}

impl Error {
    pub(crate) fn at_stage(self, stage: &str) -> Self {
        Error::Stage {
            stage: stage.to_string(),
            inner: Box::new(self),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
