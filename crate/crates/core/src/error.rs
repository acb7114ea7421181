use thiserror::Error;

/// Errors raised by the linear-algebra kernels, channel constructors and the SDP driver.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension overflow: {0}")]
    DimensionOverflow(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("matrix is not Hermitian: max deviation {deviation:e} exceeds {tolerance:e}")]
    Symmetry { deviation: f64, tolerance: f64 },

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("{what} = {value} outside supported range {range}")]
    Range {
        what: &'static str,
        value: f64,
        range: String,
    },

    #[error("invalid input: {0}")]
    Validity(String),

    #[error("affine constraints are inconsistent: least-squares residual {residual:e}")]
    InfeasibleAtSetup { residual: f64 },

    #[error("F0 = {f0} is infeasible for n = {n}; feasible range is [{f0_min:.10}, {f0_max}]")]
    InfeasibleF0 {
        n: usize,
        f0: f64,
        f0_min: f64,
        f0_max: f64,
    },

    #[error("solver did not converge: {0}")]
    NotConverged(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
