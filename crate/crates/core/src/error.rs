use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vector has zero Euclidean norm")]
    ZeroNormVector,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("batch of size {n} is too small; contrastive losses need at least 2 columns")]
    BatchTooSmall { n: usize },
    #[error("matrix has zero total L1 mass")]
    AllZeroMatrix,
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("entropy gradient undefined: column {column} has an exactly-zero entry")]
    NondifferentiablePoint { column: usize },
    #[error("alpha cache built for parameter version {cache} but model is at version {model}")]
    StaleCache { cache: u64, model: u64 },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("{classes} classes cannot be split evenly across {clients} clients")]
    IndivisibleClasses { classes: usize, clients: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Validation(String),
    #[error("{stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn in_stage(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |source| Error::Stage {
            stage,
            source: Box::new(source),
        }
    }
}
