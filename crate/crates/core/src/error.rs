//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied option or parameter is outside its legal range.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An evaluation point lies outside the distribution's support.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient data: {n} exceedances, need at least {min}")]
    InsufficientData { n: usize, min: usize },

    /// The profile-likelihood search found no interior maximum.
    #[error("maximum-likelihood search did not converge: {0}")]
    NonConvergence(String),

    #[error("degenerate candidate grid: {0}")]
    DegenerateGrid(String),

    /// Fitted shape falls outside the embedded critical-value table.
    #[error("shape {shape} outside critical-value table range [{min}, {max}]")]
    UnsupportedShape { shape: f64, min: f64, max: f64 },

    /// Asymptotic normality of the MLE requires shape > -1/2.
    #[error("regularity violated: fitted shape {gamma} <= -0.5")]
    RegularityViolation { gamma: f64 },

    /// The delta-method variance came out negative beyond numerical slack,
    /// which signals a covariance misuse upstream.
    #[error("non-positive delta-method variance: {value}")]
    NonPositiveVariance { value: f64 },

    #[error("invalid scenario: {0}")]
    InvalidSpec(String),

    #[error("cannot read {path}: {source}")]
    FileUnreadable {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("schema mismatch in {path}: {detail}")]
    SchemaMismatch { path: String, detail: String },

    #[error("no usable rows in {path}")]
    EmptyAfterParse { path: String },

    #[error("year {0} not present in dataset")]
    YearAbsent(i32),

    #[error("empty input")]
    EmptyInput,
}
