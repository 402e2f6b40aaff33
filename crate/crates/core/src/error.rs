use thiserror::Error;

use crate::curvature::PackingMetric;
use crate::mesh::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate triangle: cosine-law argument {value} for angle {angle} is outside [-1, 1]")]
    DegenerateTriangle { angle: usize, value: f64 },

    #[error("invalid metric: {0}")]
    InvalidMetric(String),

    #[error("invalid target curvatures: {0}")]
    InvalidTargets(String),

    #[error("invalid vertex subset: {0}")]
    InvalidSubset(String),

    #[error("step size underflow (h = {step:e})")]
    StepUnderflow { step: f64 },

    #[error("newton solver did not converge after {} iterations (residual {:e})", .0.iterations, .0.residual)]
    NonConvergence(Box<NonConvergence>),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error in {location}: {message}")]
    Parse { location: String, message: String },

    #[error("mesh failed validation with {} violation(s)", .0.len())]
    Validation(Vec<Violation>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Best iterate of a failed Newton solve.
#[derive(Debug, Clone)]
pub struct NonConvergence {
    pub best: PackingMetric,
    pub iterations: usize,
    pub residual: f64,
}
