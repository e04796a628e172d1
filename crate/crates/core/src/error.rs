use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read or write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed network file: {0}")]
    Parse(String),

    #[error("shape mismatch in layer {layer}: {detail}")]
    ShapeMismatch { layer: usize, detail: String },

    #[error("layer {layer}: unsupported activation `{activation}` (hidden layers must be relu, only the final layer may be linear)")]
    UnsupportedActivation { layer: usize, activation: String },

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("degenerate surrogate knots: {0}")]
    DegenerateKnots(String),

    #[error("clipping topology breakdown: {0}")]
    Topology(String),

    #[error("memory budget exceeded at layer {layer}: {bytes} bytes of live cell state (limit {limit})")]
    MemoryBudget {
        layer: usize,
        bytes: usize,
        limit: usize,
    },

    #[error("face {face} is not planar (deviation {deviation:e})")]
    NonPlanarFace { face: usize, deviation: f64 },

    #[error("triangle {index} is degenerate")]
    DegenerateTriangle { index: usize },

    #[error("mesh is empty")]
    EmptyMesh,

    #[error("all {0} reference points diverged during projection")]
    AllPointsDiverged(usize),

    #[error("OBJ line {line}: {msg}")]
    Obj { line: usize, msg: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
