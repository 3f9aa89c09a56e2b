use std::fmt;

use rotodiag_core::Error as CoreError;
use serde::Serialize;

/// Machine-readable error class; each maps to its own process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ErrorCode {
    Config,
    Io,
    Parse,
    Numeric,
    Contract,
}

impl ErrorCode {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCode::Config => 2,
            ErrorCode::Io => 3,
            ErrorCode::Parse => 4,
            ErrorCode::Numeric => 5,
            ErrorCode::Contract => 6,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::Config => "CONFIG",
            ErrorCode::Io => "IO",
            ErrorCode::Parse => "PARSE",
            ErrorCode::Numeric => "NUMERIC",
            ErrorCode::Contract => "CONTRACT",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliError {
    pub code: ErrorCode,
    pub message: String,
}

impl CliError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::Config, message)
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::Io, message)
    }

    pub fn parse(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::Parse, message)
    }

    pub fn contract(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::Contract, message)
    }

    /// Prefixes the message with where the error happened.
    pub fn context(self, what: impl fmt::Display) -> Self {
        CliError {
            message: format!("{what}: {}", self.message),
            ..self
        }
    }

    /// `{"error":{"code":"PARSE","exit_code":4,"message":"..."}}`
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": {
                "code": self.code.as_str(),
                "exit_code": self.code.exit_code(),
                "message": self.message,
            }
        })
        .to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code.as_str(), self.message)
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let code = match &e {
            CoreError::Parse(_) => ErrorCode::Parse,
            CoreError::NonFinite(_) | CoreError::SingularCovariance(_) | CoreError::EmptyComponent(_) => {
                ErrorCode::Numeric
            }
            CoreError::InvalidParam(_) | CoreError::BandOutOfRange { .. } => ErrorCode::Config,
            _ => ErrorCode::Contract,
        };
        CliError::new(code, e.to_string())
    }
}
