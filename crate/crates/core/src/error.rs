use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("index out of range: {what} {index} (limit {limit})")]
    Index {
        what: &'static str,
        index: usize,
        limit: usize,
    },

    #[error("unknown {what}: {id}")]
    Lookup { what: &'static str, id: u64 },

    #[error("centroid of an empty mask")]
    EmptyMask,

    #[error("coincident centroids have no direction")]
    CoincidentCentroids,

    #[error("proportion must lie in (0, 1], got {0}")]
    InvalidProportion(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("malformed payload: {0}")]
    MalformedPayload(String),

    #[error("malformed packet: {0}")]
    MalformedPacket(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("frame {target} lies outside delivered range [{first}, {last}]")]
    ExtrapolationUnsupported {
        target: usize,
        first: usize,
        last: usize,
    },

    #[error("protocol violation: event {event} is illegal in state {state}")]
    ProtocolViolation { state: String, event: String },

    #[error("service unavailable: no knowledge base for video {0}")]
    ServiceUnavailable(u32),

    #[error("conventional baseline carries zero bits")]
    InvalidBaseline,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
