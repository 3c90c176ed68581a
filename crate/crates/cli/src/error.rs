use preypred::Error;

/// Failure of a command, grouped by exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::InvalidParam { .. }
            | Error::Config { .. }
            | Error::Domain(_)
            | Error::NonConstantMortality(_)
            | Error::BracketInvalid { .. } => CliError::Validation(msg),
            Error::DegenerateRates { .. }
            | Error::PreyAbsorbed { .. }
            | Error::EventBudget { .. }
            | Error::NonFinite { .. }
            | Error::NoCycle(_)
            | Error::NoMinimum { .. } => CliError::Runtime(msg),
        }
    }
}
