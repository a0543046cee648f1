use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of an operation (e.g. `t < 0`).
    #[error("domain error: {0}")]
    Domain(String),

    /// Evaluation point outside a sampled table.
    #[error("range error: {0}")]
    Range(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Time grid construction or alignment problem.
    #[error("grid error: {0}")]
    Grid(String),

    /// The implicit step matrix could not be factored.
    #[error("singular implicit step matrix ({0})")]
    StepFailure(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unsupported kernel: {0}")]
    UnsupportedKernel(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures caused by the numerics rather than by the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::StepFailure(_) | Error::Numerical(_))
    }
}
