//! Calibration assessment and boldness-recalibration for binary-event
//! probability predictions.
//!
//! Predictions are adjusted with the linear-log-odds (LLO) family
//! `c(x; δ, γ) = σ(ln δ + γ·logit x)`. [`calibration::bayes_ms`] scores how
//! plausible it is that the predictions are already calibrated,
//! [`calibration::mle_recal`] applies the likelihood-maximizing adjustment, and
//! [`boldness::brcal`] finds the adjustment with the widest spread whose
//! posterior probability of calibration is still at least `t`.

// `!(v > 0.0)` is deliberate in validation: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boldness;
pub mod calibration;
pub mod emit;
pub mod error;
pub mod ingest;
pub mod likelihood;
pub mod optim;
pub mod prob;
pub mod surface;
pub mod synth;

pub use error::{Error, Result};
pub use prob::{LloParams, PredictionSet};
