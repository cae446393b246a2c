use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed record at line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("unknown label at line {line}")]
    UnknownLabel { line: usize },
    #[error("duplicate document id {0:?}")]
    DuplicateId(String),
    #[error("unknown medium {0:?}")]
    UnknownMedium(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate labels: training data needs both classes")]
    DegenerateLabels,
    #[error("dimension mismatch: model has {expected} features, input index {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("lexicon requires linear model")]
    NotLinear,
    #[error("negative feature value {value} at index {index}")]
    NegativeFeature { index: usize, value: f64 },
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("medium {medium}: {source}")]
    Medium {
        medium: String,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input data rather than a bug or a bad
    /// argument.
    pub fn is_data_error(&self) -> bool {
        match self {
            Error::Io { .. }
            | Error::Malformed { .. }
            | Error::UnknownLabel { .. }
            | Error::DuplicateId(_)
            | Error::UnknownMedium(_)
            | Error::DegenerateLabels
            | Error::NegativeFeature { .. }
            | Error::Csv(_)
            | Error::Json(_) => true,
            Error::Fold { source, .. } | Error::Medium { source, .. } => source.is_data_error(),
            _ => false,
        }
    }
}
