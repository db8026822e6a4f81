use std::path::PathBuf;

use crate::krylov::SolveReport;

/// Errors produced by grid construction, operator assembly and the solvers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("problem size {n} exceeds the dense evaluation cap {cap}")]
    Size { n: usize, cap: usize },

    #[error("lattice sum diverges: exponent {s} must exceed dimension {d}")]
    Divergence { s: f64, d: usize },

    #[error("conjugate gradient breakdown at iteration {iteration}: <p, Ap> = {curvature:e}")]
    Breakdown { iteration: usize, curvature: f64 },

    #[error("time step {step} failed: PCG stopped after {} iterations at relative residual {:e}", .report.iterations, .report.relative_residual)]
    StepFailed { step: usize, report: Box<SolveReport> },

    #[error("reference field has zero norm")]
    DegenerateReference,

    #[error("rate fit failed: {0}")]
    Fit(String),

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("internal consistency violated: {0}")]
    Internal(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
