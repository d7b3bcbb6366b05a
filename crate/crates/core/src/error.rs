use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("input does not decay at the grid boundary (|f| = {boundary:e} at the edge, max {max:e})")]
    NonDecaying { boundary: f64, max: f64 },

    #[error("quadrature tolerance not met: estimated error {estimate:e} exceeds {tolerance:e}")]
    Tolerance { estimate: f64, tolerance: f64 },

    #[error("path produced by the {0} scheme carries no jump record")]
    MissingJumps(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("level grid [{lo}, {hi}] does not cover the path range [{path_lo}, {path_hi}]")]
    Coverage { lo: f64, hi: f64, path_lo: f64, path_hi: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("non-finite value in `{0}`")]
    NonFinite(String),

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
