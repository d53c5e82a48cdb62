use thiserror::Error;

/// Failure modes of the contest toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid population: {0}")]
    InvalidPopulation(String),
    #[error("invalid prize schedule: {0}")]
    InvalidPrizes(String),
    #[error("quadrature tolerance not met on [{a}, {b}]: change {change:e}")]
    ToleranceNotMet { a: f64, b: f64, change: f64 },
    #[error("step size underflow at v = {at}")]
    Stiffness { at: f64 },
    #[error("solution decreased by {drop:e} at v = {at}")]
    NonMonotone { at: f64, drop: f64 },
    #[error("value {value} outside table range [{lo}, {hi}]")]
    Range { value: f64, lo: f64, hi: f64 },
    #[error("no sign change on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("invalid regime: {0}")]
    InvalidRegime(String),
    #[error("ODE startup failure: {0}")]
    OdeStartupFailure(String),
    #[error("stitching error: branches differ by {gap:e} at k(1) = {k_at_1}")]
    Stitching { k_at_1: f64, gap: f64 },
    #[error("degenerate distribution: {0}")]
    DegenerateDistribution(String),
    #[error("certification failure: rank {j} beats rank 1 by {margin:e}")]
    CertificationFailure { j: usize, margin: f64 },
    #[error("invalid table: {0}")]
    InvalidTable(String),
}

pub type Result<T> = std::result::Result<T, Error>;
