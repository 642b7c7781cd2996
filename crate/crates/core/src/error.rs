use thiserror::Error;

/// Errors raised by the pricing, boundary, duality and calibration routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: String,
    },

    #[error("admissibility violated: {0}")]
    Admissibility(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("{what} = {value} is outside the supported range [{lo}, {hi}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("volatility bound violated at x = {x}: sigma = {sigma} not in [{lo}, {hi}]")]
    HvolViolation { x: f64, sigma: f64, lo: f64, hi: f64 },

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("boundary integration aborted: denominator collapsed at level {level} (last valid level {last_valid})")]
    DenominatorCollapse { level: f64, last_valid: f64 },

    #[error("internal consistency failure: {0}")]
    Consistency(String),

    #[error("data error at level {level}: {reason}")]
    Data { level: f64, reason: String },

    #[error("arbitrage violation at strike {strike}: {reason}")]
    Arbitrage { strike: f64, reason: String },

    #[error("threshold not bracketed by the sample: {0}")]
    ThresholdNotBracketed(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, value: f64, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            value,
            reason: reason.into(),
        }
    }

    /// Short machine-readable tag for the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::Admissibility(_) => "admissibility",
            Error::Precondition(_) => "precondition",
            Error::OutOfRange { .. } => "out_of_range",
            Error::HvolViolation { .. } => "hvol_violation",
            Error::Numeric(_) => "numeric",
            Error::DenominatorCollapse { .. } => "denominator_collapse",
            Error::Consistency(_) => "consistency",
            Error::Data { .. } => "data",
            Error::Arbitrage { .. } => "arbitrage",
            Error::ThresholdNotBracketed(_) => "threshold_not_bracketed",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, value, "must be finite and positive"))
    }
}
