use std::path::PathBuf;

use noniid_core::convexity::ConvexityError;
use noniid_core::devices::DeviceError;
use noniid_core::hypothesis::HypothesisError;
use noniid_core::selftest::SelfTestError;
use thiserror::Error;

use crate::config::ConfigIssue;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_OVERFLOW: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration:\n{}", list(.0))]
    Config(Vec<ConfigIssue>),
    #[error("resource limit exceeded: {0}")]
    Overflow(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Run(String),
}

fn list(issues: &[ConfigIssue]) -> String {
    issues.iter().map(|i| format!("  {i}")).collect::<Vec<_>>().join("\n")
}

impl CliError {
    pub fn config(key: impl Into<String>, message: impl ToString) -> Self {
        CliError::Config(vec![ConfigIssue::new(key, message.to_string())])
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Overflow(_) => EXIT_OVERFLOW,
            CliError::Io { .. } | CliError::Run(_) => EXIT_FAILURE,
        }
    }
}

impl From<Vec<ConfigIssue>> for CliError {
    fn from(issues: Vec<ConfigIssue>) -> Self {
        CliError::Config(issues)
    }
}

impl From<HypothesisError> for CliError {
    fn from(e: HypothesisError) -> Self {
        match e {
            HypothesisError::StateSpaceTooLarge { .. } | HypothesisError::SearchSpaceTooLarge { .. } => {
                CliError::Overflow(e.to_string())
            }
            HypothesisError::Device(d) => d.into(),
            other => CliError::Run(other.to_string()),
        }
    }
}

impl From<DeviceError> for CliError {
    fn from(e: DeviceError) -> Self {
        match e {
            DeviceError::SupportTooLarge { .. } => CliError::Overflow(e.to_string()),
            other => CliError::Run(other.to_string()),
        }
    }
}

impl From<ConvexityError> for CliError {
    fn from(e: ConvexityError) -> Self {
        match e {
            ConvexityError::Hypothesis(h) => h.into(),
            other => CliError::Run(other.to_string()),
        }
    }
}

impl From<SelfTestError> for CliError {
    fn from(e: SelfTestError) -> Self {
        CliError::Run(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Run(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Run(e.to_string())
    }
}
