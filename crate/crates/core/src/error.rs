use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library can report.
///
/// Each variant maps to a stable class name (see [`Error::class`]) which the
/// CLI prints on stderr and the C ABI maps onto a status code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },

    #[error("line {line}: price {price} is not strictly positive")]
    NonPositivePrice { line: usize, price: f64 },

    #[error("line {line}: duplicate date {date}")]
    DuplicateDate { line: usize, date: String },

    #[error("gap of {missing} missing day(s) after {after}")]
    NonUniformSpacing { after: String, missing: i64 },

    #[error("input contains no observations")]
    EmptyInput,

    #[error("need at least {required} samples, got {actual}")]
    TooShort { required: usize, actual: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("scale {j} outside 1..={max}")]
    ScaleOutOfRange { j: usize, max: usize },

    #[error("inertial range [{first}, {last}] invalid for window of {window} samples")]
    InvalidRange {
        first: usize,
        last: usize,
        window: usize,
    },

    #[error("moment order q = {0} must be positive and finite")]
    InvalidMomentOrder(f64),

    #[error("scale spectrum vanishes at scale {j}; log-regression undefined")]
    DegenerateSpectrum { j: usize },

    #[error("window of {window} samples exceeds series length {len}")]
    WindowExceedsSeries { window: usize, len: usize },

    #[error("segmentation infeasible: {0}")]
    InfeasibleSegmentation(String),

    #[error("segment of {len} samples shorter than minimum {min}")]
    SegmentTooShort { len: usize, min: usize },

    #[error("series share no common date range")]
    EmptyIntersection,

    #[error("zero variance input")]
    ZeroVariance,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("tracks are not on the same window grid")]
    GridMismatch,

    #[error("series has constant increments")]
    ConstantSeries,

    #[error("path length {n} exceeds exact-sampler cap {cap}")]
    SeriesTooLong { n: usize, cap: usize },

    #[error("hurst function value {value} at t = {t} leaves (0, 1)")]
    HurstOutOfRange { t: f64, value: f64 },

    #[error("volatility function value {value} at t = {t} is not positive")]
    VolatilityOutOfRange { t: f64, value: f64 },

    #[error("covariance is not positive definite at step {step}")]
    NotPositiveDefinite { step: usize },

    #[error("csv: {0}")]
    Csv(String),

    #[error("json: {0}")]
    Json(String),
}

impl Error {
    /// Stable machine-readable class name.
    pub fn class(&self) -> &'static str {
        match self {
            Error::Io { .. } => "Io",
            Error::MalformedRow { .. } => "MalformedRow",
            Error::NonPositivePrice { .. } => "NonPositivePrice",
            Error::DuplicateDate { .. } => "DuplicateDate",
            Error::NonUniformSpacing { .. } => "NonUniformSpacing",
            Error::EmptyInput => "EmptyInput",
            Error::TooShort { .. } => "TooShort",
            Error::InvalidParameter { .. } => "InvalidParameter",
            Error::ScaleOutOfRange { .. } => "ScaleOutOfRange",
            Error::InvalidRange { .. } => "InvalidRange",
            Error::InvalidMomentOrder(_) => "InvalidMomentOrder",
            Error::DegenerateSpectrum { .. } => "DegenerateSpectrum",
            Error::WindowExceedsSeries { .. } => "WindowExceedsSeries",
            Error::InfeasibleSegmentation(_) => "InfeasibleSegmentation",
            Error::SegmentTooShort { .. } => "SegmentTooShort",
            Error::EmptyIntersection => "EmptyIntersection",
            Error::ZeroVariance => "ZeroVariance",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::GridMismatch => "GridMismatch",
            Error::ConstantSeries => "ConstantSeries",
            Error::SeriesTooLong { .. } => "SeriesTooLong",
            Error::HurstOutOfRange { .. } => "HurstOutOfRange",
            Error::VolatilityOutOfRange { .. } => "VolatilityOutOfRange",
            Error::NotPositiveDefinite { .. } => "NotPositiveDefinite",
            Error::Csv(_) => "Csv",
            Error::Json(_) => "Json",
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
