use std::path::PathBuf;

use thiserror::Error;

use crate::protocol::SimulationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sensor is co-located with the transmitter; path loss is undefined")]
    ZeroDistance,

    #[error("expected {expected} symbols for {modulation}, got {actual}")]
    SymbolCount {
        modulation: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("expected {expected} values, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("model shapes differ: {0}")]
    ShapeMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("topology is not connected")]
    Disconnected,

    #[error("no connected layout found after {attempts} attempts")]
    LayoutInfeasible { attempts: usize },

    #[error("{sensors} sensors given for a topology of {nodes} nodes")]
    SensorCountMismatch { sensors: usize, nodes: usize },

    #[error("not converged after {} rounds", .0.rounds_run())]
    NotConverged(Box<SimulationReport>),

    #[error("malformed model blob: {0}")]
    ModelFormat(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
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
}
