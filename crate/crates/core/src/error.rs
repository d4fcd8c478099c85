use thiserror::Error;

use crate::prob::LloParams;

#[derive(Debug, Error)]
pub enum Error {
    #[error("value {value} at index {index} is outside [0, 1]")]
    Domain { index: usize, value: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("outcomes are constant (all {0}); both classes are required to fit")]
    DegenerateOutcomes(u8),

    #[error("non-finite {what} at delta={}, gamma={}", .params.delta, .params.gamma)]
    NonFinite {
        what: &'static str,
        params: LloParams,
    },

    #[error("gamma is zero; the adjusted predictions collapse to a single value")]
    DegenerateGamma,

    #[error(
        "t = {t} is not achievable; the maximum posterior probability of calibration is {ceiling}"
    )]
    Infeasible { t: f64, ceiling: f64 },

    #[error("starting point violates the constraint (g = {0}); try a lower t")]
    InfeasibleStart(f64),

    #[error("solver failed: {0}")]
    SolverFailure(String),

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
