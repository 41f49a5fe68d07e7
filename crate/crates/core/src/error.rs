use std::io;

use thiserror::Error;

/// Errors raised by the metric, ingestion and reporting routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("no ratings supplied")]
    EmptyInput,

    #[error("dataset contains no observations")]
    EmptyDataset,

    #[error("{}rating code {code} is not part of the response space", line_prefix(*.line))]
    UnknownRating { code: i64, line: Option<usize> },

    #[error("{}period must be non-negative, got {period}", line_prefix(*.line))]
    NegativePeriod { period: i64, line: Option<usize> },

    #[error("line {line}: malformed row: {reason}")]
    MalformedRow { line: usize, reason: String },

    #[error("unknown category `{0}`")]
    UnknownCategory(String),

    #[error(
        "drift fit needs at least {required} longitudinal measurement points (five-point minimum), got {points}"
    )]
    InsufficientData { points: usize, required: usize },

    #[error("time index has zero variance")]
    DegenerateTime,

    #[error("interval mass must lie strictly between 0 and 1, got {0}")]
    InvalidMass(f64),

    #[error("Wald interval needs at least one trial")]
    ZeroTrials,

    #[error("invalid response space: {0}")]
    InvalidSpace(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown format `{0}`")]
    UnknownFormat(String),

    #[error("missing input: {0}")]
    MissingInput(String),

    #[error("i/o failure: {0}")]
    Io(#[from] io::Error),
}

fn line_prefix(line: Option<usize>) -> String {
    match line {
        Some(l) => format!("line {l}: "),
        None => String::new(),
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
