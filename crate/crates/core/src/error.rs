use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("precision too small: {bits} bits (minimum 16)")]
    PrecisionTooSmall { bits: u32 },

    #[error("malformed scalar `{0}`")]
    MalformedScalar(String),

    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),

    #[error("jet mismatch: {0}")]
    JetMismatch(&'static str),

    #[error("division by (near-)zero constant term")]
    NearZeroDivision,

    #[error("pole: 1/(1+t) is undefined at t = -1")]
    Pole,

    #[error("truncation budget exceeded: {needed} outer terms needed at order {order}, limit {limit}")]
    TruncationBudget {
        order: usize,
        needed: usize,
        limit: usize,
    },

    #[error("ambiguous branch near integer at x = {0}; supply the point in rational form")]
    AmbiguousBranch(String),

    #[error("exactness required: {0}")]
    ExactnessRequired(String),

    #[error("order {order} exceeds cap {cap}: {reason}")]
    OrderCap {
        order: usize,
        cap: usize,
        reason: &'static str,
    },

    #[error("inconclusive window: all coefficients in [{lo}, {hi}] vanish")]
    InconclusiveWindow { lo: usize, hi: usize },

    #[error("unsupported for antiderivative check: {0}")]
    UnsupportedAntiderivative(String),

    #[error("invalid function spec `{text}`: {reason}")]
    InvalidSpec { text: String, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{context} at t = {point}: {source}")]
    AtPoint {
        context: &'static str,
        point: String,
        source: Box<Error>,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl Error {
    pub fn at_point(self, context: &'static str, point: impl ToString) -> Error {
        Error::AtPoint {
            context,
            point: point.to_string(),
            source: Box::new(self),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Error {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Underlying error with point annotations stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtPoint { source, .. } => source.root(),
            other => other,
        }
    }

    /// CLI exit code: 1 usage, 2 numeric cap or precision failure, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::Io { .. } => 3,
            Error::MalformedScalar(_)
            | Error::ZeroDenominator(_)
            | Error::InvalidSpec { .. }
            | Error::InvalidArgument(_)
            | Error::UnknownExperiment(_)
            | Error::Config(_)
            | Error::UnsupportedAntiderivative(_)
            | Error::ExactnessRequired(_)
            | Error::Pole => 1,
            _ => 2,
        }
    }
}
