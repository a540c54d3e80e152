use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("edge ({0}, {1}) references a node outside [0, {2})")]
    EdgeOutOfRange(usize, usize, usize),
    #[error("self-loop on node {0} in input edge list")]
    SelfLoop(usize),
    #[error("graph construction: {0}")]
    InvalidGraph(String),
    #[error("node {0} has no label available")]
    MissingLabel(usize),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("unknown dataset `{0}`")]
    UnknownDataset(String),
    #[error("split file {path}: {msg}")]
    Split { path: PathBuf, msg: String },
    #[error("synthetic graph: {0}")]
    Synthetic(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("shape mismatch in {op}: {lhs:?} vs {rhs:?}")]
    Shape {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },
    #[error("softmax over a row with no finite entry (row {0})")]
    DegenerateSoftmax(usize),
    #[error("loss must be a 1x1 tensor, got {0:?}")]
    NonScalarLoss((usize, usize)),
    #[error("non-finite gradient for parameter `{0}`")]
    NonFiniteGradient(String),

    #[error("series too short: need at least {needed} samples, got {got}")]
    SeriesTooShort { needed: usize, got: usize },
    #[error("series lengths differ: {0} vs {1}")]
    SeriesLength(usize, usize),
    #[error("constant series: the estimator needs a non-degenerate metric space")]
    ConstantSeries,
    #[error("invalid estimator configuration: {0}")]
    EstimatorConfig(String),

    #[error("node index {0} out of range for {1} rows")]
    NodeOutOfRange(usize, usize),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("non-finite loss at epoch {epoch}: {diagnostics}")]
    NonFiniteLoss { epoch: usize, diagnostics: String },
    #[error("empty evaluation mask")]
    EmptyMask,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
    let path = path.into();
    move |source| Error::Io { path, source }
}
