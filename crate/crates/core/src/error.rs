use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid chart: {0}")]
    InvalidChart(String),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("expression `{src}`: {msg}")]
    Expression { src: String, msg: String },
    #[error("form of degree {0} not accepted here")]
    BadDegree(u8),
    #[error("form length {got} does not match cell count {expected}")]
    FormLength { expected: usize, got: usize },
    #[error("node {node} has no neighbor across an open face")]
    OpenBoundary { node: usize },
    #[error("degenerate metric at node {node} (det = {det})")]
    DegenerateMetric { node: usize, det: f64 },
    #[error("path left the chart through an open face at ({x}, {y})")]
    PathExit { x: f64, y: f64 },
    #[error("interval map sample: {0}")]
    IntervalMap(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("Reeb system singular at node {node} (contact volume {volume:e})")]
    ReebDegenerate { node: usize, volume: f64 },
    #[error("degenerate level {level}: {msg}")]
    DegenerateLevel { level: f64, msg: String },
    #[error("invalid leaf complex: {0}")]
    InvalidComplex(String),
    #[error("outcome does not match complex: {0}")]
    ComplexMismatch(String),
    #[error("unknown instance `{0}`")]
    UnknownInstance(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
