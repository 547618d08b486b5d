use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised across the crate.
///
/// Variants split into data problems (bad input, unknown columns, parse
/// failures) and numerical problems (rank deficiency, degenerate covariates);
/// see [`Error::is_numerical`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("design matrix is rank deficient: column `{column}` is linearly dependent on the others")]
    RankDeficient { column: String },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("standard error of coefficient {index} is zero; the fit is degenerate")]
    ZeroStdError { index: usize },

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("covariate `{0}` has (numerically) zero variance")]
    DegenerateCovariate(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("distribution has empty support")]
    EmptySupport,

    #[error("invalid joint distribution: {0}")]
    InvalidJoint(String),

    #[error("population second-moment matrix is singular")]
    SingularMoments,

    #[error("{name} = {value} is outside the admissible range {range}")]
    OutOfRange {
        name: String,
        value: f64,
        range: String,
    },

    #[error("disturbance constraint violated: delta_{step} = {value} < -1")]
    ConstraintViolated { step: u64, value: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: u64,
        column: usize,
        message: String,
    },

    #[error("missing value at line {line}, column {column}")]
    MissingValue { line: u64, column: usize },

    #[error("schema mismatch: expected columns {expected:?}, found {found:?}")]
    SchemaMismatch {
        expected: Vec<String>,
        found: Vec<String>,
    },

    #[error("log transform of column `{column}` hit non-positive value {value} (row {row})")]
    NonPositiveLogInput {
        column: String,
        row: usize,
        value: f64,
    },

    #[error("row exclusion left fewer than two observations")]
    EmptyAfterExclusion,

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for failures of the numerical machinery rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::RankDeficient { .. }
                | Error::ZeroStdError { .. }
                | Error::DegenerateCovariate(_)
                | Error::SingularMoments
                | Error::ConstraintViolated { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
