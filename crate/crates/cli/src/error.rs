use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{kind}: {source}")]
    Solver { kind: &'static str, source: epnozzle::Error },
    #[error("cannot write artifact: {0}")]
    Write(String),
    #[error("{0} check(s) failed")]
    Verification(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Validation(_) | CliError::Read { .. } => 2,
            CliError::Solver { .. } | CliError::Write(_) => 3,
            CliError::Verification(_) => 4,
        }
    }
}

impl From<epnozzle::Error> for CliError {
    fn from(e: epnozzle::Error) -> Self {
        CliError::Solver { kind: error_name(&e), source: e }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Write(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Write(e.to_string())
    }
}

pub fn error_name(e: &epnozzle::Error) -> &'static str {
    use epnozzle::Error::*;
    match e {
        InvalidParams(_) => "InvalidParams",
        NonPositiveArgument { .. } => "NonPositiveArgument",
        SonicDenominator(_) => "SonicDenominator",
        StagnationDenominator(_) => "StagnationDenominator",
        SonicEncounter(_) => "SonicEncounter",
        StepFailure(_) => "StepFailure",
        NotApplicable(_) => "NotApplicable",
        LengthExceedsCritical { .. } => "LengthExceedsCritical",
        TruncationTooHigh { .. } => "TruncationTooHigh",
        GridMismatch(_) => "GridMismatch",
        SingularSystem(_) => "SingularSystem",
        ResidualTooLarge(_) => "ResidualTooLarge",
        MaxIterExceeded { .. } => "MaxIterExceeded",
        IterateEscapedSet(_) => "IterateEscapedSet",
        NonMonotoneStream { .. } => "NonMonotoneStream",
        DivergenceTooLarge(_) => "DivergenceTooLarge",
        SymmetryViolation(_) => "SymmetryViolation",
    }
}

pub type CliResult<T> = Result<T, CliError>;
