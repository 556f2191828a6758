use std::path::PathBuf;

use thiserror::Error;

use crate::solver::PicardReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("non-finite value in {context} at index {index}")]
    NonFinite { context: &'static str, index: usize },

    #[error("field is in {found} representation, expected {expected}")]
    Representation { expected: &'static str, found: &'static str },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("negative power of omega applied to a field with zero-mode mass {mass:.3e}")]
    ZeroMode { mass: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("inadmissible norm: {0}")]
    Norm(String),

    #[error("quadrature self-test failed: relative error {rel_err:.3e} integrating nu^-2")]
    Quadrature { rel_err: f64 },

    #[error("time {t} outside the mesh range (0, {t_max}]")]
    TimeOutOfRange { t: f64, t_max: f64 },

    #[error(
        "exponential series did not reach tolerance {tol:.1e} after {terms} terms at step {step}; refine the time mesh"
    )]
    SeriesDivergence { step: usize, terms: usize, tol: f64 },

    #[error("unitarity lost at step {step}: relative L2 drift {drift:.3e}")]
    Unitarity { step: usize, drift: f64 },

    #[error("Picard iteration is not contracting (ratios {:?})", .0.ratios)]
    NonContraction(Box<PicardReport>),

    #[error("config line {line}: {msg}")]
    ConfigParse { line: usize, msg: String },

    #[error("config key `{key}`: {msg}")]
    ConfigValue { key: String, msg: String },

    #[error("snapshot {path}: {msg}")]
    Snapshot { path: PathBuf, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
