use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A feed or corpus document could not be parsed. `offset` is a byte offset
    /// into the input.
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: u64, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("input error: {0}")]
    Input(String),

    /// Nothing left to work with (empty corpus, empty vocabulary, ...).
    #[error("empty data: {0}")]
    EmptyData(String),

    /// Operation precondition violated by the data itself.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimMismatch { expected: usize, actual: usize },

    #[error("non-finite loss at epoch {epoch} (learning rate {learning_rate}); lower the learning rate")]
    NonFiniteLoss { epoch: usize, learning_rate: f64 },

    #[error("augmentation service error: {message}")]
    Service { message: String, retryable: bool },

    #[error("invariant violated: {0}")]
    Invariant(String),

    /// Error raised while running one unit of an experiment.
    #[error("{task} / {technique} / round {round}: {source}")]
    Unit {
        task: String,
        technique: String,
        round: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Config(_) | Error::Input(_) | Error::Io(_) => 2,
            Error::Json(_) | Error::Csv(_) => 2,
            Error::EmptyData(_) => 3,
            Error::Unit { source, .. } => source.exit_code(),
            _ => 4,
        }
    }
}
