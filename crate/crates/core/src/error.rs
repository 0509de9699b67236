use thiserror::Error;

/// Errors produced across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported order: ell = {ell} exceeds the supported maximum {max}")]
    UnsupportedOrder { ell: usize, max: usize },

    #[error("index error: {0}")]
    Index(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("normalization error: {0}")]
    Normalization(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("infeasible constraint: C = {value} must lie strictly inside ({lo}, {hi})")]
    Infeasible { value: f64, lo: f64, hi: f64 },

    #[error("non-finite state at t = {time}")]
    NonFinite { time: f64 },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics themselves (blow-up, infeasibility)
    /// as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Infeasible { .. } | Error::NonFinite { .. })
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::UnsupportedOrder { .. } => "unsupported_order",
            Error::Index(_) => "index",
            Error::Config(_) => "config",
            Error::Domain(_) => "domain",
            Error::Dimension(_) => "dimension",
            Error::Normalization(_) => "normalization",
            Error::InsufficientData(_) => "insufficient_data",
            Error::Infeasible { .. } => "infeasible",
            Error::NonFinite { .. } => "non_finite",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
