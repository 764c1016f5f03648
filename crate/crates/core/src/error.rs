use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad error class, used by the command line front end to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Numerical,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("grid mismatch: fields live on different grids")]
    GridMismatch,
    #[error("negative density {min:e} (below -1e-12)")]
    NegativeDensity { min: f64 },
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    MaxIterationsExceeded { iterations: usize, residual: f64 },
    #[error("soliton width {width} exceeds box/8 = {limit}")]
    WidthTooLarge { width: f64, limit: f64 },
    #[error("norm drifted by {drift:e} (relative) at t = {time}")]
    NormDrift { time: f64, drift: f64 },
    #[error("non-finite value encountered at t = {time}")]
    NonFinite { time: f64 },
    #[error("point {point:?} is too close to a node of the pilot wave (relative density {density:e})")]
    NodeProximity { point: [f64; 3], density: f64 },
    #[error("velocity changed by {change:.3} (relative) across one snapshot interval at t = {time}")]
    StepOutOfBand { time: f64, change: f64 },
    #[error("velocity {speed} exceeds sanity cap {cap}")]
    VelocityCap { speed: f64, cap: f64 },
    #[error("sources {a} and {b} overlap: separation {separation} <= {minimum}")]
    SourceOverlap {
        a: usize,
        b: usize,
        separation: f64,
        minimum: f64,
    },
    #[error("fit window has {shells} usable shells, need at least 5")]
    WindowTooNarrow { shells: usize },
    #[error("max |phi_G|/c^2 = {max} is outside the perturbative regime (< 0.5)")]
    PerturbationTooLarge { max: f64 },
    #[error("no potential minima below r_max = {r_max}")]
    NoEquilibria { r_max: f64 },
    #[error("collision at t = {time}: separation {separation}")]
    CollisionDetected { time: f64, separation: f64 },
    #[error("config error: {0}")]
    Config(String),
    #[error("malformed grid dump: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) => ErrorClass::Config,
            Error::Io(_) | Error::Format(_) => ErrorClass::Io,
            _ => ErrorClass::Numerical,
        }
    }
}
