use std::path::PathBuf;

use crate::solver::SolveResult;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("failed to read or write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed scenario file: {0}")]
    Parse(String),

    #[error("invalid scenario: {0}")]
    Validation(String),

    /// The SNR target cannot be met even directly above a GBS.
    #[error("coverage radius undefined: {0}")]
    Domain(String),

    #[error("invalid association sequence: {0}")]
    Sequence(String),

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("infeasible for outage budget {budget_s} s: {reason}")]
    Infeasible { budget_s: f64, reason: String },

    /// The solver ran out of iterations; `best` is the best feasible iterate.
    #[error("waypoint solver did not converge after {iterations} iterations (gap {gap_m:.3e} m)")]
    NonConvergence {
        iterations: usize,
        gap_m: f64,
        best: Box<SolveResult>,
    },

    /// No grid path respects the budget. This can happen on feasible
    /// instances because of quantization.
    #[error("grid DP found no budget-respecting path (grid step {delta_m} m): {reason}")]
    DpInfeasible { delta_m: f64, reason: String },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn is_infeasible(&self) -> bool {
        matches!(self, Error::Infeasible { .. } | Error::DpInfeasible { .. })
    }
}
