use thiserror::Error;

use crate::geometry::GeometryError;

/// Failures of the intrinsic-dimension and information-imbalance estimators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimateError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("only {retained} points usable after discarding duplicates and tail (need 3)")]
    DegenerateCloud { retained: usize },
    #[error("every neighbor-distance ratio equals 1; the log sum is zero")]
    ZeroSum,
    #[error("discard fraction {0} is outside [0, 1)")]
    InvalidDiscardFraction(f64),
    #[error("subsample fraction {fraction} of {n} points leaves fewer than 3")]
    InvalidFraction { fraction: f64, n: usize },
    #[error("at least one seed is required")]
    NoSeeds,
    #[error("the two clouds do not describe the same samples in the same order")]
    SampleMismatch,
    #[error("both imbalances are zero")]
    DivisionByZero,
}

impl EstimateError {
    /// True for failures caused by the data itself rather than by bad arguments.
    pub fn is_degenerate_input(&self) -> bool {
        matches!(
            self,
            EstimateError::DegenerateCloud { .. }
                | EstimateError::ZeroSum
                | EstimateError::DivisionByZero
                | EstimateError::Geometry(GeometryError::TooFewPoints(_))
                | EstimateError::Geometry(GeometryError::DuplicateRowsDetected { .. })
        )
    }
}
