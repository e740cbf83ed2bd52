//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Errors produced by symbol arithmetic, operator construction, and the
/// index engines.
#[derive(Debug, Error)]
pub enum Error {
    /// A symbol constructor received coefficients that cannot define a
    /// nonzero trigonometric polynomial.
    #[error("invalid symbol: {0}")]
    InvalidSymbol(String),

    /// The grid violates the oversampling rule for the symbol at hand.
    #[error("grid of {actual} points is too coarse ({required} required)")]
    UndersampledGrid { required: usize, actual: usize },

    /// The operator is not Fredholm (symbol vanishes on the circle, or a
    /// compact operator was requested without an invertible scalar part).
    #[error("not Fredholm: {0}")]
    NotFredholm(String),

    /// Phase steps stayed too large after the maximum number of grid
    /// refinements.
    #[error("grid resolution exhausted: {0}")]
    GridResolution(String),

    /// A winding or series estimate landed too far from an integer.
    #[error("estimate residual {residual:.3e} exceeds acceptance threshold {limit}")]
    NonConvergent { residual: f64, limit: f64 },

    /// The reciprocal-coefficient tail at the requested bandwidth is too
    /// large for the caller's accuracy target.
    #[error("bandwidth {bandwidth} insufficient: reciprocal tail estimate {tail:.3e}")]
    BandwidthInsufficient { bandwidth: usize, tail: f64 },

    /// A truncation was requested that cannot contain a perturbation's
    /// support.
    #[error("truncation size {size} too small for perturbation support {support}")]
    TruncationTooSmall { size: usize, support: usize },

    /// Matrix shapes are incompatible for the requested operation.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A zero-sized operator was supplied where entries are required.
    #[error("empty operator")]
    EmptyOperator,

    /// A configuration value violates its documented invariant.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Textual symbol or operator specification could not be parsed.
    #[error("parse error at '{token}': {message}")]
    Parse { token: String, message: String },

    /// Rectangular sections are not defined for this operator variant.
    #[error("rectangular section unsupported for {0}")]
    UnsupportedSection(String),

    /// A homotopy path contains a waypoint without invertibility margin.
    #[error("path rejected: {0}")]
    PathRejected(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Shorthand used by the parsers.
    pub(crate) fn parse(token: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            token: token.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
