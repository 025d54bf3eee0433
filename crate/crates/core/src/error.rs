use thiserror::Error;

/// Errors produced while building or solving a stress-function model.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid discretization: {0}")]
    InvalidDiscretization(String),

    #[error("parametric coordinate {value} outside [0, 1]")]
    Domain { value: f64 },

    #[error("point ({x}, {y}) lies outside the material definition")]
    OutsideMaterial { x: f64, y: f64 },

    #[error("cannot differentiate a degree-0 spline in the {0} direction")]
    CannotDifferentiate(&'static str),

    #[error("degenerate mapping at (xi, eta) = ({xi}, {eta}): det J = {det:e}")]
    DegenerateMapping { xi: f64, eta: f64, det: f64 },

    #[error("invalid material: {0}")]
    InvalidMaterial(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("infeasible constraints: {0}")]
    InfeasibleConstraints(String),

    #[error("solver error: {0}")]
    Solver(String),

    #[error("gauge error: {0}")]
    Gauge(String),

    #[error("reference solution unavailable for case `{0}`")]
    ReferenceUnavailable(String),

    #[error("reference norm is zero; relative error undefined")]
    ZeroReferenceNorm,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
