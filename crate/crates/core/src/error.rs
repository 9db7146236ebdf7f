use thiserror::Error;

#[derive(Debug, Error)]
pub enum PchError {
    #[error("dimension error: {0}")]
    Dimension(String),

    /// Rank-deficient design. `columns` lists the instrument indices (0-based)
    /// that could not be pivoted, when they can be identified.
    #[error("singular design: {message} (columns {columns:?})")]
    Singular {
        message: String,
        columns: Vec<usize>,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error at row {row}, column '{column}': {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("missing column '{0}'")]
    MissingColumn(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = PchError> = std::result::Result<T, E>;

impl PchError {
    pub(crate) fn singular(message: impl Into<String>, columns: Vec<usize>) -> Self {
        PchError::Singular {
            message: message.into(),
            columns,
        }
    }
}
