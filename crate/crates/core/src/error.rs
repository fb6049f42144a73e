use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid node: {0}")]
    InvalidNode(String),
    #[error("duplicate node id `{0}`")]
    DuplicateNode(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("sites missing from the node set: {}", .0.join(", "))]
    UnknownSites(Vec<String>),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("graph has {n} nodes, above the dense-storage cap of {cap}")]
    TooManyNodes { n: usize, cap: usize },
    #[error("graphs share no node ids")]
    EmptyIntersection,
    #[error("graphs are not aligned: node lists differ")]
    NotAligned,
    #[error("{what} needs at least {min} nodes, got {got}")]
    TooFewNodes { what: &'static str, min: usize, got: usize },
    #[error("invalid panel: {0}")]
    InvalidPanel(String),
    #[error("total tie weight is zero")]
    ZeroWeight,
    #[error("correlation undefined: zero variance in {0}")]
    ZeroVariance(&'static str),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: u64, msg: String },
    #[error("missing input file {0}")]
    MissingInput(PathBuf),
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
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
