use scatterlab_core::ScatterError;

/// Exit code for success.
pub const EXIT_OK: i32 = 0;
/// Exit code for numerical or convergence failures.
pub const EXIT_NUMERICAL: i32 = 1;
/// Exit code for invalid input.
pub const EXIT_INPUT: i32 = 2;

/// A failed command: message plus process exit code.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{message}")]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_NUMERICAL,
            message: message.into(),
        }
    }

    /// Failure to write results.
    pub fn output(message: impl Into<String>) -> Self {
        CliError::numerical(message)
    }
}

impl From<ScatterError> for CliError {
    fn from(e: ScatterError) -> Self {
        if e.is_input_error() || matches!(e, ScatterError::Domain(_)) {
            CliError::input(e.to_string())
        } else {
            CliError::numerical(e.to_string())
        }
    }
}
