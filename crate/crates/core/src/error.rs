use std::path::PathBuf;

use crate::problem::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid node {index}: {reason}")]
    InvalidNode { index: usize, reason: String },

    #[error("infeasible assignment: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Infeasible(Vec<Violation>),

    #[error("search space of {size} assignments exceeds the exhaustive budget of {budget} evaluations; use the heuristic tier")]
    SearchSpaceTooLarge { size: f64, budget: u64 },

    #[error("non-finite training loss at step {step} (batch of {batch} samples, last finite loss {last_finite})")]
    NonFiniteLoss { step: usize, batch: usize, last_finite: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
