use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("eccentricity {e1_deg:.3} deg exceeds the display corner eccentricity {corner_deg:.3} deg")]
    EccentricityOutOfRange { e1_deg: f64, corner_deg: f64 },

    #[error("density field sums to {sum}, expected 1")]
    UnnormalizedDensity { sum: f64 },

    #[error("latency must be positive, got {0} s")]
    NonPositiveLatency(f64),

    #[error("measurement must be positive: {0}")]
    NonPositiveMeasurement(&'static str),

    #[error("pixel ({x}, {y}) is not covered by any layer")]
    UncoveredPixel { x: u32, y: u32 },

    #[error("no streams to transmit")]
    EmptyStreams,

    #[error("empty trace")]
    EmptyTrace,

    #[error("table file: {0}")]
    TableFormat(String),

    #[error("transport: {0}")]
    Transport(#[source] io::Error),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
