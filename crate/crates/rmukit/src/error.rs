use thiserror::Error;

/// Toolkit-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A shape or wiring problem: dimensions do not conform.
    #[error("configuration error in {op}: {detail}")]
    Config { op: &'static str, detail: String },

    /// Mismatch between recorded state and the objects replaying it
    /// (e.g. a backward trace applied to the wrong parameters).
    #[error("integrity error in {op}: {detail}")]
    Integrity { op: &'static str, detail: String },

    /// A caller-supplied value is invalid (empty sequence, missing key, ...).
    #[error("input error: {0}")]
    Input(String),

    #[error("init scheme `{scheme}` is not supported for {cell} cells")]
    UnsupportedScheme { scheme: String, cell: String },

    /// A malformed record in a dataset or checkpoint file.
    #[error("{file}:{line}: {msg}")]
    Parse { file: String, line: usize, msg: String },

    /// A structurally valid file that violates the dataset schema
    /// (ragged feature dimensions, non-finite values, ...).
    #[error("schema error in {source_name}: {msg}")]
    Schema { source_name: String, msg: String },

    /// Correlation requested on a constant vector.
    #[error("undefined correlation: the {side} values are constant")]
    UndefinedCorrelation { side: &'static str },

    /// Training diverged or produced non-finite values.
    #[error("numerical failure: {what} at epoch {epoch}, batch {batch}")]
    Numerical {
        what: String,
        epoch: usize,
        batch: usize,
    },

    #[error("unsupported checkpoint version {found} (this build reads version {expected})")]
    Version { found: u32, expected: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Config {
            op,
            detail: detail.into(),
        }
    }

    pub fn integrity(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Integrity {
            op,
            detail: detail.into(),
        }
    }

    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn schema(source_name: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Schema {
            source_name: source_name.into(),
            msg: msg.into(),
        }
    }
}
