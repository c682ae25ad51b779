use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot:e})")]
    NotPositiveDefinite { pivot: f64 },

    #[error("matrix is not Hermitian (asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },

    #[error("weights sum to {total:e}, below the degeneracy floor")]
    DegenerateWeights { total: f64 },

    #[error("structured estimate is rank deficient even after diagonal loading")]
    RankDeficient,

    #[error("{needed} samples needed, only {got} available")]
    TooFewSamples { needed: usize, got: usize },

    #[error("exhaustive search supports at most {max} samples, got {got}")]
    TooLarge { max: usize, got: usize },

    #[error("GIC requires rho > 1, got {0}")]
    InvalidRho(f64),

    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),

    #[error("bad magic: expected PCB1")]
    BadMagic,

    #[error("truncated file: expected {expected} bytes of samples, found {found}")]
    TruncatedFile { expected: usize, found: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("window {rows}x{cols} does not fit in a {cube_rows}x{cube_cols} cube")]
    WindowTooLarge {
        rows: usize,
        cols: usize,
        cube_rows: usize,
        cube_cols: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
