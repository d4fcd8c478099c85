//! Calibration assessment by Bayesian model selection and by a likelihood
//! ratio test, plus MLE recalibration.
//!
//! The calibrated model fixes `δ = γ = 1`, so its BIC carries no penalty;
//! the uncalibrated model pays `2·ln n` for its two free parameters. The
//! Bayes factor is carried as a natural log because it overflows for large,
//! badly calibrated datasets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihood::{fit_mle, neg_log_likelihood, MleFit};
use crate::optim::OptimizerConfig;
use crate::prob::{inv_log_odds, llo_adjust, LloParams, PredictionSet};

pub const DEFAULT_PRIOR_MC: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationAssessment {
    pub prior_mc: f64,
    pub bic_c: f64,
    pub bic_u: f64,
    /// Natural log of the Bayes factor of the uncalibrated over the
    /// calibrated model.
    pub log_bf: f64,
    pub posterior_prob: f64,
    pub mles: LloParams,
    pub fit: MleFit,
}

impl CalibrationAssessment {
    /// The Bayes factor itself; `None` when it overflows a double.
    pub fn bayes_factor(&self) -> Option<f64> {
        let bf = self.log_bf.exp();
        bf.is_finite().then_some(bf)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrtResult {
    pub test_stat: f64,
    pub pval: f64,
    pub mles: LloParams,
    pub fit: MleFit,
}

pub fn validate_prior(prior_mc: f64) -> Result<()> {
    if prior_mc > 0.0 && prior_mc < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "prior probability of calibration must lie in (0, 1), got {prior_mc}"
        )))
    }
}

/// BIC of the calibrated and uncalibrated models from their NLL values.
pub fn bic_from_nll(n: usize, nll_calibrated: f64, nll_mle: f64) -> (f64, f64) {
    (2.0 * nll_calibrated, 2.0 * (n as f64).ln() + 2.0 * nll_mle)
}

pub fn bic_pair(data: &PredictionSet, fit: &MleFit) -> Result<(f64, f64)> {
    let nll_c = neg_log_likelihood(data, &LloParams::IDENTITY)?;
    Ok(bic_from_nll(data.len(), nll_c, fit.nll_at_opt))
}

pub fn log_bayes_factor(bic_c: f64, bic_u: f64) -> f64 {
    -(bic_u - bic_c) / 2.0
}

/// `P(M_c | y) = 1 / (1 + BF·(1 − p)/p)`, evaluated as a sigmoid in log space.
pub fn posterior_prob_calibrated(log_bf: f64, prior_mc: f64) -> f64 {
    let log_prior_odds = ((1.0 - prior_mc) / prior_mc).ln();
    inv_log_odds(-(log_bf + log_prior_odds))
}

/// Largest posterior any LLO-adjustment of `n` predictions can reach: the
/// MLE-recalibrated set, whose BIC gap is exactly `2·ln n`.
pub fn max_achievable_posterior(n: usize, prior_mc: f64) -> f64 {
    posterior_prob_calibrated(-(n as f64).ln(), prior_mc)
}

pub fn bayes_ms(
    data: &PredictionSet,
    prior_mc: f64,
    config: &OptimizerConfig,
) -> Result<CalibrationAssessment> {
    validate_prior(prior_mc)?;
    let fit = fit_mle(data, config)?;
    assessment_from_fit(data, prior_mc, fit)
}

/// [`bayes_ms`] with an already computed fit.
pub fn assessment_from_fit(
    data: &PredictionSet,
    prior_mc: f64,
    fit: MleFit,
) -> Result<CalibrationAssessment> {
    let (bic_c, bic_u) = bic_pair(data, &fit)?;
    let log_bf = log_bayes_factor(bic_c, bic_u);
    Ok(CalibrationAssessment {
        prior_mc,
        bic_c,
        bic_u,
        log_bf,
        posterior_prob: posterior_prob_calibrated(log_bf, prior_mc),
        mles: fit.params,
        fit,
    })
}

/// Likelihood ratio statistic and its χ² (2 df) p-value, `exp(−TS/2)`.
pub fn lrt_from_nll(nll_calibrated: f64, nll_mle: f64) -> (f64, f64) {
    let mut ts = 2.0 * (nll_calibrated - nll_mle);
    if ts < 0.0 {
        if ts < -1e-8 {
            log::warn!("negative likelihood ratio statistic {ts}; clipping to 0");
        }
        ts = 0.0;
    }
    (ts, (-ts / 2.0).exp())
}

pub fn llo_lrt(data: &PredictionSet, config: &OptimizerConfig) -> Result<LrtResult> {
    let fit = fit_mle(data, config)?;
    let nll_c = neg_log_likelihood(data, &LloParams::IDENTITY)?;
    let (test_stat, pval) = lrt_from_nll(nll_c, fit.nll_at_opt);
    Ok(LrtResult {
        test_stat,
        pval,
        mles: fit.params,
        fit,
    })
}

/// LLO-adjusts the predictions by their own MLEs.
pub fn mle_recal(data: &PredictionSet, config: &OptimizerConfig) -> Result<(Vec<f64>, MleFit)> {
    let fit = fit_mle(data, config)?;
    Ok((llo_adjust(data.x(), &fit.params), fit))
}
