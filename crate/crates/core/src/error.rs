use alloc::string::String;

/// Failure modes shared by every numerical routine in the crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScatterError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "degenerate spectrum: eigenvalue groups {j} and {k} are not separated (gap {gap:.3e})"
    )]
    DegenerateSpectrum { j: usize, k: usize, gap: f64 },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("existence failure: {0}")]
    Existence(String),

    #[error("rank deficiency: {0}")]
    RankDeficient(String),

    #[error("no convergence in {what} after {iterations} iterations (residual {residual:.3e})")]
    Convergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("numerical error: {0}")]
    Numerical(String),
}

impl ScatterError {
    /// True for failures caused by the caller's arguments rather than by the numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(self, ScatterError::InvalidInput(_))
    }
}

pub type Result<T> = core::result::Result<T, ScatterError>;

macro_rules! invalid {
    ($($arg:tt)*) => {
        $crate::error::ScatterError::InvalidInput(alloc::format!($($arg)*))
    };
}

pub(crate) use invalid;
