use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration or input value violates its contract. The first field
    /// names the offending parameter.
    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("operator is not traceless (|Tr| = {trace:.3e})")]
    NotTraceless { trace: f64 },

    #[error("matrix is not unitary (max deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    /// |Tr[U^dagger U_gate]| vanished, so the phase of the overlap (and with it
    /// the gradient of the trace fidelity) is undefined.
    #[error("degenerate objective: |Tr(U^dagger G)| = {overlap:.3e}")]
    DegenerateObjective { overlap: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(String),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad user input rather than numerics or I/O.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Invalid { .. }
                | Error::DimensionMismatch { .. }
                | Error::NotHermitian { .. }
                | Error::NotTraceless { .. }
                | Error::NotUnitary { .. }
        )
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

impl From<toml::de::Error> for Error {
    fn from(e: toml::de::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
