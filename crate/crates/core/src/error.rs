use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("missing dataset file {0}")]
    MissingFile(PathBuf),

    #[error("parse error in {file} line {line}: {msg}")]
    Parse {
        file: String,
        line: usize,
        msg: String,
    },

    #[error("node index {index} out of range (n = {n})")]
    NodeOutOfRange { index: usize, n: usize },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value in {stage} at epoch {epoch}")]
    NonFinite { stage: &'static str, epoch: usize },

    #[error("training diverged at epoch {epoch} (loss = {loss})")]
    Divergence {
        epoch: usize,
        loss: f64,
        history: Vec<crate::gcn::EpochRecord>,
    },

    #[error("forward cache is stale (cache version {cache}, model version {model})")]
    StaleCache { cache: u64, model: u64 },

    #[error("node {0} is not in the training set")]
    NotTrainNode(usize),

    #[error("no sampleable pairs: {0}")]
    NoPairs(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("conjugate gradient failed: {0}")]
    Solver(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Wraps an error with the pipeline stage that produced it.
    pub fn at_stage(self, stage: impl Into<String>) -> Self {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }
}
