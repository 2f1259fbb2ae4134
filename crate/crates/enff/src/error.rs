//! Crate-wide error type.

use chrono::NaiveDateTime;
use std::fmt;

/// Errors produced by any stage of the forecasting pipeline.
#[derive(Debug)]
pub enum Error {
    /// A CSV row could not be parsed. `line` is 1-based and counts the header.
    MalformedRow { line: usize, message: String },
    /// A data source contained a header but no rows.
    EmptyInput,
    /// The hourly series has a missing hour; `expected` is the first absent timestamp.
    GapDetected { expected: NaiveDateTime },
    /// The hourly series contains the same timestamp twice.
    DuplicateTimestamp { timestamp: NaiveDateTime },
    /// A split range or test day is not covered by the data.
    RangeOutOfData { message: String },
    /// Series shorter than an operation requires.
    SeriesTooShort { needed: usize, got: usize },
    /// Signal shorter than the wavelet filter support requires.
    SignalTooShort { needed: usize, got: usize },
    /// Zero variance where a correlation or ACF denominator needs spread.
    DegenerateVariance,
    /// Two sequences that must agree in length do not.
    LengthMismatch { expected: usize, got: usize },
    /// Feature construction reached back before the start of the series.
    InsufficientHistory { needed: usize, got: usize },
    /// Normalization fitting received no rows.
    EmptyTrainingSet,
    /// Fitness evaluation or training received no rows.
    EmptyDataset,
    /// Trimming-parameter selection requires validation data or an explicit alpha.
    EmptyValidation,
    /// Not enough data for ensemble training preconditions.
    InsufficientData { message: String },
    /// A vector length does not match the network specification.
    DimensionMismatch { expected: usize, got: usize, what: &'static str },
    /// The requested operation is not defined for this network kind.
    UnsupportedKind { kind: &'static str, operation: &'static str },
    /// An actual load of zero makes a percentage error undefined.
    ZeroActual { index: usize },
    /// An ARIMA order outside the supported family.
    InvalidOrder { message: String },
    /// A configuration value is missing, unparsable, or inconsistent.
    InvalidConfig { message: String },
    /// Comparison report requested over no days or no models.
    EmptyReport,
    Io(std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::MalformedRow { line, message } => {
                write!(f, "malformed row at line {line}: {message}")
            }
            Error::EmptyInput => write!(f, "input contains no data rows"),
            Error::GapDetected { expected } => {
                write!(f, "hourly gap detected: missing record for {expected}")
            }
            Error::DuplicateTimestamp { timestamp } => {
                write!(f, "duplicate timestamp {timestamp}")
            }
            Error::RangeOutOfData { message } => write!(f, "range outside data: {message}"),
            Error::SeriesTooShort { needed, got } => {
                write!(f, "series too short: need {needed} values, got {got}")
            }
            Error::SignalTooShort { needed, got } => {
                write!(f, "signal too short: need {needed} samples, got {got}")
            }
            Error::DegenerateVariance => write!(f, "zero variance in correlation input"),
            Error::LengthMismatch { expected, got } => {
                write!(f, "length mismatch: expected {expected}, got {got}")
            }
            Error::InsufficientHistory { needed, got } => {
                write!(f, "insufficient history: need index >= {needed}, got {got}")
            }
            Error::EmptyTrainingSet => write!(f, "normalization requires at least one row"),
            Error::EmptyDataset => write!(f, "dataset contains no rows"),
            Error::EmptyValidation => {
                write!(f, "alpha selection requires validation days or a fixed alpha override")
            }
            Error::InsufficientData { message } => write!(f, "insufficient data: {message}"),
            Error::DimensionMismatch { expected, got, what } => {
                write!(f, "dimension mismatch for {what}: expected {expected}, got {got}")
            }
            Error::UnsupportedKind { kind, operation } => {
                write!(f, "{operation} is not supported for {kind} networks")
            }
            Error::ZeroActual { index } => {
                write!(f, "actual value at index {index} is zero; MAPE undefined")
            }
            Error::InvalidOrder { message } => write!(f, "invalid ARIMA order: {message}"),
            Error::InvalidConfig { message } => write!(f, "invalid configuration: {message}"),
            Error::EmptyReport => write!(f, "comparison report needs at least one day and model"),
            Error::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}
