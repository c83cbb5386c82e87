use thiserror::Error;

use crate::expr::ParseError;

/// Errors raised by the geometry routines.
#[derive(Debug, Clone, Error)]
pub enum GeomError {
    #[error("point {point:?} lies outside the chart domain (margin {margin:e})")]
    OutOfDomain { point: Vec<f64>, margin: f64 },

    #[error("metric is not positive definite at {point:?}")]
    DegenerateMetric { point: Vec<f64> },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operation requires dimension {required}, chart has dimension {got}")]
    UnsupportedDimension { required: String, got: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("field is not closed: sup |d(X♭)| = {residual:e} exceeds tolerance {tol:e}")]
    NotClosed { residual: f64, tol: f64 },

    #[error("recovered potential fails verification: gradient defect {defect:e} > {bound:e}")]
    PotentialVerification { defect: f64, bound: f64 },

    #[error("trajectory left the domain at t = {exit_time} (point {point:?})")]
    DomainExit { exit_time: f64, point: Vec<f64> },

    #[error("step size underflow at t = {t} (last good state {state:?})")]
    Stiffness { t: f64, state: Vec<f64> },

    #[error("map is not an immersion at parameter {param:?}")]
    Immersion { param: Vec<f64> },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("profile reaches the rotation axis with slope {slope} at s = {s}")]
    CoordinateSingularity { s: f64, slope: f64 },

    #[error("refused: {0}")]
    Refused(String),

    #[error("{dropped} of {total} samples left the domain")]
    TooManyDropped { dropped: usize, total: usize },
}

impl GeomError {
    pub(crate) fn outside(x: &[f64], margin: f64) -> Self {
        GeomError::OutOfDomain {
            point: x.to_vec(),
            margin,
        }
    }

    /// True for errors that only mean "the evaluation point left the chart".
    pub fn is_domain(&self) -> bool {
        matches!(self, GeomError::OutOfDomain { .. })
    }
}

pub type Result<T, E = GeomError> = std::result::Result<T, E>;
