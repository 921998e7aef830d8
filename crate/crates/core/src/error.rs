use thiserror::Error;

/// Everything that can go wrong inside the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("finite-difference step must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("kernel mode index {0} is outside 0..=7")]
    ModeOutOfRange(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("quadrature grid is empty")]
    EmptyGrid,
    #[error("quadrature did not reach tolerance {tol:e} (estimated error {estimate:e}) on [{a}, {b}]")]
    QuadratureFailed { a: f64, b: f64, tol: f64, estimate: f64 },
    #[error("trajectory undefined at t = {0}")]
    TrajectoryUndefined(f64),
    #[error("forcing integral does not converge: {0}")]
    DivergentForcing(String),
    #[error("forcing is not orthogonal to the kernel: relative projection {0:e}")]
    NotOrthogonal(f64),
    #[error("Newton iteration failed after {iterations} iterations, last residual {residual:e}")]
    NewtonFailed { iterations: usize, residual: f64 },
    #[error("time step underflow: dt = {0:e}")]
    StepUnderflow(f64),
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("no crossing of the level psi = 1 found")]
    NoCrossing,
    #[error("under-resolved: {0}")]
    UnderResolved(String),
    #[error("checkpoint format: {0}")]
    Checkpoint(String),
}

pub type Result<T> = std::result::Result<T, Error>;
