//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors produced by grid, measure, model, and solver operations.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside its admissible domain (state outside `[0,1]`,
    /// action outside the declared bounds, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Two aligned sequences have incompatible lengths.
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    /// Weights that are supposed to form a probability measure do not.
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    /// A model parameter is out of range (non-positive width, discount
    /// outside `(0,1)`, ...).
    #[error("parameter error: {0}")]
    Parameter(String),

    /// A contraction-constant denominator is non-positive, e.g. `beta*K2 >= 1`.
    #[error("degenerate denominator: {0}")]
    DegenerateDenominator(String),

    /// The one-dimensional action minimization detected a bracket
    /// inconsistency, i.e. the objective is not unimodal.
    #[error("convexity violation: {0}")]
    ConvexityViolation(String),

    /// A study could not produce its reference solution.
    #[error("study aborted: {0}")]
    StudyAborted(String),

    /// An internal numerical routine failed to make progress.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The contraction conditions do not hold and the caller did not
    /// explicitly override the certification gate.
    #[error("certification failed: {0}")]
    NotCertified(String),
}

pub type Result<T> = std::result::Result<T, Error>;
