//! Bernoulli log-likelihood of LLO-adjusted predictions and MLE fitting.
//!
//! Fitting happens in `(τ, γ)` with `τ = ln δ`, which removes the positivity
//! bound on `δ`. The negative log-likelihood
//! `h(τ, γ) = Σ softplus(−z'ᵢ)·yᵢ + softplus(z'ᵢ)·(1 − yᵢ)`, `z' = τ + γ·logit(x)`,
//! is logistic regression on `(1, logit x)` and therefore convex.

use std::cell::Cell;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{
    nelder_mead, quasi_newton, MleAlgorithm, NelderMeadOptions, OptimizerConfig, Point,
    QuasiNewtonOptions,
};
use crate::prob::{inv_log_odds, softplus, LloParams, PredictionSet};

/// Coordinates a gradient is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parameterization {
    Tau,
    Delta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MleFit {
    pub params: LloParams,
    pub nll_at_opt: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub algorithm: MleAlgorithm,
    pub start: LloParams,
}

thread_local! {
    static FIT_CALLS: Cell<usize> = const { Cell::new(0) };
}

/// Number of [`fit_mle`] calls made on the current thread so far.
pub fn fit_calls_on_this_thread() -> usize {
    FIT_CALLS.with(Cell::get)
}

/// `h(τ, γ)` straight from the cached log odds. May return a non-finite value.
pub(crate) fn nll_tau(data: &PredictionSet, tau: f64, gamma: f64) -> f64 {
    data.pairs()
        .map(|(z, y)| {
            let zp = tau + gamma * z;
            if y > 0.5 {
                softplus(-zp)
            } else {
                softplus(zp)
            }
        })
        .sum()
}

/// `∇h` in `(τ, γ)`.
pub(crate) fn nll_grad_tau(data: &PredictionSet, tau: f64, gamma: f64) -> Point {
    data.pairs().fold([0.0, 0.0], |acc, (z, y)| {
        let r = inv_log_odds(tau + gamma * z) - y;
        [acc[0] + r, acc[1] + z * r]
    })
}

pub fn neg_log_likelihood(data: &PredictionSet, params: &LloParams) -> Result<f64> {
    let value = nll_tau(data, params.tau(), params.gamma);
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite {
            what: "negative log-likelihood",
            params: *params,
        })
    }
}

pub fn nll_gradient(
    data: &PredictionSet,
    params: &LloParams,
    parameterization: Parameterization,
) -> Result<Point> {
    let mut g = nll_grad_tau(data, params.tau(), params.gamma);
    if parameterization == Parameterization::Delta {
        g[0] /= params.delta;
    }
    if g.iter().all(|v| v.is_finite()) {
        Ok(g)
    } else {
        Err(Error::NonFinite {
            what: "likelihood gradient",
            params: *params,
        })
    }
}

/// Rejects data without an interior likelihood optimum.
pub(crate) fn check_fittable(data: &PredictionSet) -> Result<()> {
    if let Some(label) = data.constant_outcome() {
        return Err(Error::DegenerateOutcomes(label));
    }
    let z0 = data.logits()[0];
    if data.logits().iter().all(|&z| z == z0) {
        return Err(Error::InvalidInput(
            "all predictions are identical, so gamma is unidentifiable".into(),
        ));
    }
    Ok(())
}

/// Maximum-likelihood LLO parameters, started from the calibrated model.
pub fn fit_mle(data: &PredictionSet, config: &OptimizerConfig) -> Result<MleFit> {
    fit_mle_from(data, config, LloParams::IDENTITY)
}

pub fn fit_mle_from(
    data: &PredictionSet,
    config: &OptimizerConfig,
    start: LloParams,
) -> Result<MleFit> {
    FIT_CALLS.with(|c| c.set(c.get() + 1));
    check_fittable(data)?;
    let x0 = [start.tau(), start.gamma];
    let objective = |p: &Point| nll_tau(data, p[0], p[1]);

    let m = match config.algorithm {
        MleAlgorithm::NelderMead => nelder_mead(
            objective,
            x0,
            &NelderMeadOptions {
                max_time_seconds: config.max_time_seconds,
                ..Default::default()
            },
        )?,
        MleAlgorithm::QuasiNewtonGrad => quasi_newton(
            objective,
            |p: &Point| nll_grad_tau(data, p[0], p[1]),
            x0,
            &QuasiNewtonOptions {
                max_time_seconds: config.max_time_seconds,
                ..Default::default()
            },
        )?,
    };
    let params = LloParams::from_tau(m.point[0], m.point[1]);
    if !m.value.is_finite() || !params.delta.is_finite() || params.delta <= 0.0 {
        return Err(Error::NonFinite {
            what: "MLE fit",
            params,
        });
    }
    if !m.status.is_success() {
        log::warn!("MLE fit stopped before converging ({:?})", m.status);
    }
    Ok(MleFit {
        params,
        nll_at_opt: m.value,
        iterations: m.iterations,
        evaluations: m.evaluations,
        converged: m.status.is_success(),
        algorithm: config.algorithm,
        start,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::gradcheck::check_gradient;
    use approx::assert_abs_diff_eq;

    fn set(x: &[f64], y: &[u8]) -> PredictionSet {
        PredictionSet::with_default_epsilon(x, y).unwrap()
    }

    #[test]
    fn symmetric_two_point_case() {
        let d = set(&[0.5, 0.5], &[1, 0]);
        let v = neg_log_likelihood(&d, &LloParams::IDENTITY).unwrap();
        assert_abs_diff_eq!(v, 2.0 * 2f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn single_term_gradient() {
        let d = set(&[0.5, 0.5], &[1, 1]);
        let g = nll_gradient(&d, &LloParams::IDENTITY, Parameterization::Tau).unwrap();
        // two identical terms, each (0.5 − 1, 0)
        assert_abs_diff_eq!(g[0], -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g[1], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn delta_form_divides_by_delta() {
        let d = set(&[0.2, 0.7, 0.9], &[0, 1, 1]);
        let p = LloParams::new(2.5, 0.8).unwrap();
        let gt = nll_gradient(&d, &p, Parameterization::Tau).unwrap();
        let gd = nll_gradient(&d, &p, Parameterization::Delta).unwrap();
        assert_abs_diff_eq!(gd[0], gt[0] / 2.5, epsilon = 1e-15);
        assert_eq!(gd[1], gt[1]);
        let fd = check_gradient(
            |q: &Point| nll_tau(&d, q[0].ln(), q[1]),
            |_| gd,
            &[2.5, 0.8],
            1e-6,
            1e-7,
        );
        assert!(fd.passed, "{fd:?}");
    }

    #[test]
    fn extreme_parameters_stay_finite() {
        let d = set(&[1e-12, 0.5, 1.0 - 1e-12], &[1, 0, 0]);
        let v = neg_log_likelihood(&d, &LloParams::new(1.0, 40.0).unwrap()).unwrap();
        assert!(v.is_finite() && v > 1000.0);
    }

    #[test]
    fn constant_outcomes_are_rejected() {
        let d = set(&[0.2, 0.4, 0.9], &[1, 1, 1]);
        assert!(matches!(
            fit_mle(&d, &OptimizerConfig::default()),
            Err(Error::DegenerateOutcomes(1))
        ));
    }

    #[test]
    fn constant_predictions_are_rejected() {
        let d = set(&[0.5; 4], &[1, 0, 1, 0]);
        assert!(matches!(
            fit_mle(&d, &OptimizerConfig::default()),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn fit_lowers_nll_and_zeroes_gradient() {
        let x = [0.1, 0.25, 0.3, 0.45, 0.5, 0.62, 0.7, 0.8, 0.85, 0.95];
        let y = [0, 1, 0, 0, 1, 0, 1, 1, 0, 1];
        let d = set(&x, &y);
        for algorithm in [MleAlgorithm::NelderMead, MleAlgorithm::QuasiNewtonGrad] {
            let cfg = OptimizerConfig {
                algorithm,
                ..Default::default()
            };
            let fit = fit_mle(&d, &cfg).unwrap();
            assert!(fit.converged);
            assert!(fit.nll_at_opt <= neg_log_likelihood(&d, &LloParams::IDENTITY).unwrap());
            let g = nll_gradient(&d, &fit.params, Parameterization::Tau).unwrap();
            assert!(
                g[0].abs() < 1e-6 && g[1].abs() < 1e-6,
                "{algorithm:?} {g:?}"
            );
        }
    }

    #[test]
    fn separable_data_has_no_finite_mle() {
        let d = set(&[0.2, 0.8, 0.4], &[0, 1, 1]);
        assert!(fit_mle(&d, &OptimizerConfig::default()).is_err());
    }

    #[test]
    fn fit_counter_increments() {
        let d = set(&[0.2, 0.8, 0.4, 0.6], &[0, 1, 1, 0]);
        let before = fit_calls_on_this_thread();
        fit_mle(&d, &OptimizerConfig::default()).unwrap();
        assert_eq!(fit_calls_on_this_thread(), before + 1);
    }
}
