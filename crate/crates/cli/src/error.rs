use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Core(#[from] rc_glauber::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("acceptance failed: {0}")]
    Acceptance(String),
}

#[derive(Debug, Serialize)]
struct ErrorReport<'a> {
    error: &'a str,
    message: String,
}

impl CliError {
    pub fn spec(msg: impl Into<String>) -> Self {
        CliError::Spec(msg.into())
    }

    /// Machine-readable category.
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Spec(_) => "invalid_spec",
            CliError::Core(rc_glauber::Error::CftpCapExceeded { .. }) => "cap_exceeded",
            CliError::Core(rc_glauber::Error::EnumerationCap { .. }) => "enumeration_cap",
            CliError::Core(rc_glauber::Error::ContainmentViolation { .. }) => "containment_violation",
            CliError::Core(
                rc_glauber::Error::InvalidSize(_)
                | rc_glauber::Error::InvalidParams(_)
                | rc_glauber::Error::InvalidBoundary(_)
                | rc_glauber::Error::InvalidEdge { .. }
                | rc_glauber::Error::InvalidVertex { .. },
            ) => "invalid_spec",
            CliError::Core(_) => "runtime",
            CliError::Io(_) | CliError::Csv(_) => "io",
            CliError::Acceptance(_) => "acceptance_failed",
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self.category() {
            "invalid_spec" => 2,
            _ => 1,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&ErrorReport {
            error: self.category(),
            message: self.to_string(),
        })
        .expect("error report serializes")
    }
}
