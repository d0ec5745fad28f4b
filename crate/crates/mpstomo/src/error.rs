use std::path::Path;

use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] mpstomo_core::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: String,
    exit_code: i32,
}

#[derive(Serialize)]
struct ErrorJson<'a> {
    error: ErrorBody<'a>,
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), message: e.to_string() }
    }

    /// Stable machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io { .. } => "io",
            CliError::Schema(_) => "schema",
            CliError::Config(_) => "config",
            CliError::Csv(_) => "io",
            CliError::Core(e) => match e {
                mpstomo_core::Error::DenseLimit { .. } => "resource_limit",
                mpstomo_core::Error::InsufficientSupport { .. } => "insufficient_support",
                mpstomo_core::Error::VacuousGap(_) => "vacuous_gap",
                mpstomo_core::Error::InvalidArgument(_) => "invalid_argument",
                _ => "numerical",
            },
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(mpstomo_core::Error::DenseLimit { .. }) => 3,
            _ => 1,
        }
    }

    /// One-line JSON object `{"error": {"kind", "message", "exit_code"}}`.
    pub fn to_json(&self) -> String {
        let body = ErrorJson { error: ErrorBody { kind: self.kind(), message: self.to_string(), exit_code: self.exit_code() } };
        serde_json::to_string(&body).expect("error body serializes")
    }
}
