use thiserror::Error;

/// Errors raised across the library. Every variant carries enough context to
/// locate the failing stage without rerunning it.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("kernel is not symmetric: {0}")]
    Asymmetric(String),

    #[error("quadrature did not converge on {what}: estimate {estimate:e}, error {error:e}")]
    Quadrature {
        what: String,
        estimate: f64,
        error: f64,
    },

    #[error("tail truncation bound {bound:e} exceeds tolerance {tol:e}")]
    Truncation { bound: f64, tol: f64 },

    #[error("symbol table lacks resolution near xi = {xi}: {reason}")]
    Resolution { xi: f64, reason: String },

    #[error("degenerate kernel: {0}")]
    DegenerateKernel(String),

    #[error("assembly failed: {0}")]
    Assembly(String),

    #[error(
        "matrix is not positive definite: pivot {pivot:e} at row {row}, \
         smallest eigenvalue estimate {min_eig:e}"
    )]
    NotPositiveDefinite { row: usize, pivot: f64, min_eig: f64 },

    #[error("iterative solver stalled after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("barrier sequence is not Cauchy: relative drift {drift:.4} exceeds {limit}")]
    NotCauchy { drift: f64, limit: f64 },

    #[error("scan failed: {0}")]
    Scan(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("comparison function vanishes at {0:?}")]
    Division(Vec<f64>),

    #[error("dyadic tail does not converge: {0}")]
    DivergentTail(String),

    #[error("frequency band is empty: {0}")]
    EmptyBand(String),

    #[error("simulation horizon exceeded: only {exited} of {paths} paths exited")]
    Horizon { exited: usize, paths: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
