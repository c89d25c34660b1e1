use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("system must have at least one server and one customer (m={m}, n={n})")]
    EmptySystem { m: usize, n: usize },

    #[error("service rate mu[{index}] = {rate} is not strictly positive")]
    NonPositiveRate { index: usize, rate: f64 },

    #[error(
        "unstable system: arrival rate {alpha} is not below service rate mu[{index}] = {rate}"
    )]
    Unstable { alpha: f64, index: usize, rate: f64 },

    #[error("arrival rate {0} must be finite and nonnegative")]
    InvalidArrivalRate(f64),

    #[error("sample count must be at least 1")]
    InvalidCount,

    #[error("eigensolver did not converge within {sweeps} sweeps")]
    EigenNonConvergence { sweeps: usize },

    #[error("matrix is not Hermitian (relative asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("z = {z} is at or too close to a pole of l(z)")]
    PoleProximity { z: f64 },

    #[error("no sign change of l'(z) on ({lo}, {hi})")]
    BracketFailure { lo: f64, hi: f64 },

    #[error("boundary regime: {0}")]
    BoundaryRegime(String),

    #[error("unsupported rate profile: {0}")]
    UnsupportedProfile(String),

    #[error("argument {value} outside the supported domain ({expected})")]
    DomainError { value: f64, expected: &'static str },

    #[error("Painleve II integration blew up at s = {s} (|q| = {q:e})")]
    OdeBlowup { s: f64, q: f64 },

    #[error("empty sample")]
    EmptySample,

    #[error("invalid instance: {0}")]
    InvalidInstance(String),
}

pub type Result<T> = std::result::Result<T, Error>;
