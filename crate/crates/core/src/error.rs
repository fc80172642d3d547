use thiserror::Error;

/// Errors produced by measure queries, kernels, solvers and samplers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("no stationary law: the integrated tail diverges")]
    NoStationaryLaw,

    #[error("no solution: target {target} is at least the total mass {total} below the upper limit")]
    NoSolution { target: f64, total: f64 },

    #[error("bracket not found after {doublings} doublings")]
    BracketNotFound { doublings: u32 },

    #[error("quadrature did not converge (partial value {partial}, error estimate {error})")]
    Quadrature { partial: f64, error: f64 },

    #[error("divergence heuristic is inconclusive for {0}")]
    Inconclusive(&'static str),

    #[error("iteration cap of {0} exceeded")]
    IterationCap(u64),

    #[error("window not closed: records are incomplete at t = {0}")]
    WindowNotClosed(f64),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
