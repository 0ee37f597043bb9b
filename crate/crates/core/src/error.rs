use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed CSV: {0}")]
    Csv(String),

    #[error("ragged row at line {line}: expected {expected} fields, found {found}")]
    RaggedRow {
        line: u64,
        expected: usize,
        found: usize,
    },

    #[error("empty input: no header row")]
    EmptyFile,

    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),

    #[error("column `{column}` cannot be read as {kind}: {reason}")]
    KindOverride {
        column: String,
        kind: String,
        reason: String,
    },

    #[error("unknown feature `{0}`")]
    UnknownFeature(String),

    #[error("table has no rows")]
    EmptyTable,

    #[error("predicate selects no rows with a group-by value (zero support)")]
    EmptySupport,

    #[error("invalid predicate: {0}")]
    InvalidPredicate(String),

    #[error("invalid visualization: {0}")]
    InvalidVisualization(String),

    #[error("pmfs are defined over different supports")]
    MisalignedSupports,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("query class is empty (every feature has alpha = beta = 0)")]
    EmptyQueryClass,

    #[error("requirements unsatisfiable: {0}")]
    Unsatisfiable(String),

    #[error("ill-posed test: {0}")]
    IllPosed(String),

    #[error("instance too large for exhaustive enumeration: {0}")]
    InstanceTooLarge(String),

    #[error("predicate is outside the declared query class: {0}")]
    OutsideQueryClass(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
