use thiserror::Error;

/// Errors raised by the diagnostics library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("signal has {0} samples, at least 2 are required")]
    EmptySignal(usize),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("{0} samples given, at least 2 are required")]
    TooFewSamples(usize),
    #[error("frequency band [{lo}, {hi}] Hz selects {bins} bins, at least 2 are required")]
    EmptyBand { lo: f64, hi: f64, bins: usize },
    #[error("{0} rows given, at least 2 are required")]
    TooFewRows(usize),
    #[error("covariance of component {0} is not positive definite")]
    SingularCovariance(usize),
    #[error("component {0} has no responsibility mass")]
    EmptyComponent(usize),
    #[error("{n} points cannot be split into {k} clusters")]
    TooFewPoints { n: usize, k: usize },
    #[error("cluster {0} has no members")]
    EmptyCluster(usize),
    #[error("silhouette needs at least two clusters")]
    SingleCluster,
    #[error("all labels belong to a single class")]
    SingleClass,
    #[error("expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("no row has any out-of-bag tree")]
    NoOobCoverage,
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("class {0} has fewer than 2 rows")]
    ClassTooSmall(usize),
    #[error("spectrum ends at {max_hz} Hz, indicators need {needed_hz} Hz")]
    BandOutOfRange { max_hz: f64, needed_hz: f64 },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
