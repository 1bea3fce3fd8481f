use thiserror::Error;

/// Everything that can go wrong inside the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("quadrature did not converge after {subdivisions} subdivisions (error estimate {error:e})")]
    NonConvergence { subdivisions: usize, error: f64 },
    #[error("pole {pole} is not strictly inside ({x1}, {x2})")]
    PoleOutsideInterval { pole: f64, x1: f64, x2: f64 },
    #[error("log-gamma evaluated at the pole z = {0}")]
    PoleOfGamma(f64),
    #[error("denominator D(k) vanishes at k = {0}")]
    DividesByZeroD(f64),
    #[error("energies coincide (|E1 - E2| = {0:e}); boundary identity is indeterminate")]
    DegenerateEnergies(f64),
    #[error("momenta coincide (|k1 - k2| = {0:e})")]
    DegenerateMomenta(f64),
    #[error("packet amplitude at the grid edge is {0:e}; widen the k grid")]
    GridTooCoarse(f64),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
