use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("spectral variable x = {x} lies within {tol:e} of pole n = {n}")]
    PoleProximity { n: usize, x: f64, tol: f64 },

    #[error("{what} did not converge after {iterations} iterations")]
    NotConverged { what: &'static str, iterations: usize },

    #[error("argument {0} outside the domain [-1, 1]")]
    Domain(f64),

    #[error("log-gamma requires x > 0, got {0}")]
    GammaDomain(f64),

    #[error("negative discriminant {0:e} in closed-form first-order energy")]
    NegativeDiscriminant(f64),

    #[error("eigenvalue {re} has imaginary part {im:e}")]
    ComplexEigenvalue { re: f64, im: f64 },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("overlap not converged: cutoff doubling moved the value by {delta:e}")]
    OverlapNotConverged { delta: f64 },

    #[error("no interior minimum: energy decreases monotonically up to r = {r}")]
    NoInteriorMinimum { r: f64 },
}
