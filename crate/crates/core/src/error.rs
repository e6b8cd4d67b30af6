use thiserror::Error;

/// Errors surfaced by the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("simulator fault for patient {patient} at minute {minute}: {detail}")]
    SimulatorFault {
        patient: u32,
        minute: u64,
        detail: String,
    },

    #[error("schema error in {source_name}: {detail}")]
    Schema { source_name: String, detail: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("cohort mismatch: {0}")]
    CohortMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn schema(source_name: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Schema {
            source_name: source_name.into(),
            detail: detail.into(),
        }
    }
}
