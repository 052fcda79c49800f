use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid dominating function: {0}")]
    InvalidDominating(String),

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("invalid lattice parameters: {0}")]
    InvalidParams(String),

    #[error("scale {scale} is below the resolution floor {floor}")]
    BelowResolutionFloor { scale: f64, floor: f64 },

    #[error("lattice construction failed: {0}")]
    Construction(String),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid function sample: {0}")]
    InvalidFunction(String),

    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("no threshold up to {cap} gives a bad set of at most half the mass of cell {cell}")]
    NoThreshold { cell: usize, cap: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("missing file: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
