//! Library backing the `piq` binary: run configuration, the pipeline
//! runner, and the report consolidator. Kept as a library so integration
//! tests can drive every stage without spawning processes.

pub mod config;
pub mod manifest;
pub mod report;
pub mod run;
pub mod synth;

use std::fmt;

/// Process-level error classes; each maps to a documented exit code.
#[derive(Debug)]
pub enum CliError {
    /// Exit 2: malformed configuration or arguments.
    Config(String),
    /// Exit 3: missing, unreadable, or inconsistent data.
    Data(String),
    /// Exit 4: a numeric stage failed (non-finite loss, degenerate
    /// resampling, all-infinite intervals).
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<piq_core::data::DataError> for CliError {
    fn from(e: piq_core::data::DataError) -> Self {
        use piq_core::data::DataError;
        match e {
            DataError::BadCutSpec(_)
            | DataError::BadFractions { .. }
            | DataError::UnknownRole { .. }
            | DataError::UnknownNoiseLaw(_)
            | DataError::NegativeNoiseScale(_) => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<piq_core::mlp::MlpError> for CliError {
    fn from(e: piq_core::mlp::MlpError) -> Self {
        use piq_core::mlp::MlpError;
        match e {
            MlpError::BadConfig(_) => CliError::Config(e.to_string()),
            MlpError::NonFiniteLoss { .. } | MlpError::NonFiniteParameter { .. } => {
                CliError::Numeric(e.to_string())
            }
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<piq_core::gbrt::GbrtError> for CliError {
    fn from(e: piq_core::gbrt::GbrtError) -> Self {
        use piq_core::gbrt::GbrtError;
        match e {
            GbrtError::BadParams(_) | GbrtError::BadTau(_) => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<piq_core::conformal::ConformalError> for CliError {
    fn from(e: piq_core::conformal::ConformalError) -> Self {
        use piq_core::conformal::ConformalError;
        match e {
            ConformalError::BadAlpha(_)
            | ConformalError::BadFoldCount { .. }
            | ConformalError::MissingLearner { .. } => CliError::Config(e.to_string()),
            ConformalError::NeverOmitted { .. } => CliError::Numeric(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<piq_core::metrics::MetricsError> for CliError {
    fn from(e: piq_core::metrics::MetricsError) -> Self {
        use piq_core::metrics::MetricsError;
        match e {
            MetricsError::AllInfinite => CliError::Numeric(e.to_string()),
            MetricsError::BadGrid => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}
