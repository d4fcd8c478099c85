//! Boldness-recalibration: maximize the spread of LLO-adjusted predictions
//! subject to their posterior probability of calibration staying at or above
//! a target `t`.
//!
//! The posterior of an adjusted set `x' = c(x; δ, γ)` needs the MLEs of `x'`.
//! Those follow in closed form from the MLEs of `x`: adjusting `x'` by
//! `δ' = δ̂ / δ^(γ̂/γ)`, `γ' = γ̂ / γ` composes back to `(δ̂, γ̂)`. So the
//! constraint is evaluated without any nested fit, and its gradient has a
//! closed form.

use serde::{Deserialize, Serialize};

use crate::calibration::{max_achievable_posterior, validate_prior};
use crate::error::{Error, Result};
use crate::likelihood::{fit_mle, MleFit};
use crate::optim::{
    auglag_solve_observed, AugLagOptions, ConstrainedSolveTrace, OptimizerConfig, Point,
    QuasiNewtonOptions, TraceRecord,
};
use crate::prob::{inv_log_odds, llo_adjust, sample_sd, softplus, LloParams, PredictionSet};

pub const DEFAULT_T: f64 = 0.95;

/// Below this `|γ|` the solver treats the point as outside the domain.
pub const GAMMA_BARRIER: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShortcutMles {
    pub delta_prime: f64,
    pub gamma_prime: f64,
}

impl ShortcutMles {
    pub fn params(&self) -> LloParams {
        LloParams {
            delta: self.delta_prime,
            gamma: self.gamma_prime,
        }
    }
}

/// MLEs of `c(x; grid)` given the MLEs `base` of `x`.
pub fn shortcut_mles(base: &LloParams, grid: &LloParams) -> Result<ShortcutMles> {
    if grid.gamma == 0.0 {
        return Err(Error::DegenerateGamma);
    }
    let gamma_prime = base.gamma / grid.gamma;
    Ok(ShortcutMles {
        delta_prime: (base.tau() - gamma_prime * grid.tau()).exp(),
        gamma_prime,
    })
}

fn adjusted_tau(data: &PredictionSet, tau: f64, gamma: f64) -> Vec<f64> {
    data.logits()
        .iter()
        .map(|&z| inv_log_odds(tau + gamma * z))
        .collect()
}

pub fn boldness_objective(data: &PredictionSet, params: &LloParams) -> f64 {
    -sample_sd(&llo_adjust(data.x(), params))
}

/// `−sd` and its gradient in `(τ, γ)`.
fn objective_with_grad(data: &PredictionSet, tau: f64, gamma: f64) -> Result<(f64, Point)> {
    let xp = adjusted_tau(data, tau, gamma);
    let n = xp.len() as f64;
    let sd = sample_sd(&xp);
    if !(sd > 0.0) {
        return Err(Error::DegenerateGamma);
    }
    let mean = xp.iter().sum::<f64>() / n;
    let w: Vec<f64> = xp.iter().map(|v| v * (1.0 - v)).collect();
    let zw: Vec<f64> = w.iter().zip(data.logits()).map(|(w, z)| w * z).collect();
    let w_bar = w.iter().sum::<f64>() / n;
    let zw_bar = zw.iter().sum::<f64>() / n;
    let (mut s_tau, mut s_gamma) = (0.0, 0.0);
    for i in 0..xp.len() {
        let dev = xp[i] - mean;
        s_tau += dev * (w[i] - w_bar);
        s_gamma += dev * (zw[i] - zw_bar);
    }
    let scale = -1.0 / ((n - 1.0) * sd);
    Ok((-sd, [scale * s_tau, scale * s_gamma]))
}

/// `(∂f/∂δ, ∂f/∂γ)` for `f = −sd(x')`.
pub fn boldness_objective_jacobian(data: &PredictionSet, params: &LloParams) -> Result<Point> {
    if params.gamma == 0.0 {
        return Err(Error::DegenerateGamma);
    }
    let (_, g) = objective_with_grad(data, params.tau(), params.gamma)?;
    Ok([g[0] / params.delta, g[1]])
}

/// Pieces of the constraint at one point, shared by value and gradient.
struct ConstraintEval {
    posterior: f64,
    /// `P·(1 − P)`, computed without cancellation.
    spread: f64,
    /// `Σ [γ̂'(y − x'') − y + x']` and its log-odds-weighted twin.
    sums: Point,
}

fn evaluate_constraint(
    data: &PredictionSet,
    base: &LloParams,
    tau: f64,
    gamma: f64,
    prior_mc: f64,
) -> Result<ConstraintEval> {
    if gamma == 0.0 {
        return Err(Error::DegenerateGamma);
    }
    // shortcut MLEs kept in log space; exp(τ') overflows for small |γ|
    let g_s = base.gamma / gamma;
    let tau_s = base.tau() - g_s * tau;
    let (mut nll_c, mut nll_u) = (0.0, 0.0);
    let mut sums = [0.0, 0.0];
    for (z, y) in data.pairs() {
        let zp = tau + gamma * z;
        let zpp = tau_s + g_s * zp;
        if y > 0.5 {
            nll_c += softplus(-zp);
            nll_u += softplus(-zpp);
        } else {
            nll_c += softplus(zp);
            nll_u += softplus(zpp);
        }
        let term = g_s * (y - inv_log_odds(zpp)) - y + inv_log_odds(zp);
        sums[0] += term;
        sums[1] += z * term;
    }
    let log_bf = nll_c - nll_u - (data.len() as f64).ln();
    let a = log_bf + ((1.0 - prior_mc) / prior_mc).ln();
    if !a.is_finite() {
        return Err(Error::NonFinite {
            what: "constraint",
            params: LloParams::from_tau(tau, gamma),
        });
    }
    let posterior = inv_log_odds(-a);
    Ok(ConstraintEval {
        posterior,
        spread: posterior * inv_log_odds(a),
        sums,
    })
}

/// Posterior probability of calibration of `c(x; params)`, using the MLE
/// shortcut from `base` (the MLEs of `x`).
pub fn constraint_posterior(
    data: &PredictionSet,
    base: &LloParams,
    params: &LloParams,
    prior_mc: f64,
) -> Result<f64> {
    Ok(evaluate_constraint(data, base, params.tau(), params.gamma, prior_mc)?.posterior)
}

/// `(∂g/∂δ, ∂g/∂γ)` for `g = −(P − t)`, i.e. the negated gradient of
/// [`constraint_posterior`].
pub fn constraint_jacobian(
    data: &PredictionSet,
    base: &LloParams,
    params: &LloParams,
    prior_mc: f64,
) -> Result<Point> {
    let j = constraint_jacobian_tau(data, base, params.tau(), params.gamma, prior_mc)?;
    Ok([j[0] / params.delta, j[1]])
}

fn constraint_jacobian_tau(
    data: &PredictionSet,
    base: &LloParams,
    tau: f64,
    gamma: f64,
    prior_mc: f64,
) -> Result<Point> {
    let e = evaluate_constraint(data, base, tau, gamma, prior_mc)?;
    if e.spread == 0.0 {
        return Ok([0.0, 0.0]);
    }
    Ok([e.spread * e.sums[0], e.spread * e.sums[1]])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BrcalResult {
    pub t: f64,
    pub prior_mc: f64,
    pub params: LloParams,
    pub sb: f64,
    pub probs: Vec<f64>,
    /// Achieved posterior probability of calibration of `probs`.
    pub posterior: f64,
    /// Iterates reported as `(δ, γ)`.
    pub trace: ConstrainedSolveTrace,
    pub base_mles: LloParams,
    pub base_fit: MleFit,
}

pub fn brcal(
    data: &PredictionSet,
    t: f64,
    prior_mc: f64,
    config: &OptimizerConfig,
) -> Result<BrcalResult> {
    let fit = fit_mle(data, config)?;
    brcal_with_fit(data, &fit, t, prior_mc, config)
}

/// [`brcal`] reusing a fit of `data`, e.g. across several `t` levels.
pub fn brcal_with_fit(
    data: &PredictionSet,
    fit: &MleFit,
    t: f64,
    prior_mc: f64,
    config: &OptimizerConfig,
) -> Result<BrcalResult> {
    validate_prior(prior_mc)?;
    config.validate()?;
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::InvalidInput(format!(
            "t must lie in (0, 1), got {t}"
        )));
    }
    let ceiling = max_achievable_posterior(data.len(), prior_mc);
    if t >= ceiling {
        return Err(Error::Infeasible { t, ceiling });
    }
    let base = fit.params;

    let f = |p: &Point| {
        if p[1].abs() < GAMMA_BARRIER {
            return f64::INFINITY;
        }
        -sample_sd(&adjusted_tau(data, p[0], p[1]))
    };
    let df = |p: &Point| {
        objective_with_grad(data, p[0], p[1])
            .map(|(_, g)| g)
            .unwrap_or([f64::NAN; 2])
    };
    let g = |p: &Point| {
        if p[1].abs() < GAMMA_BARRIER {
            return f64::INFINITY;
        }
        evaluate_constraint(data, &base, p[0], p[1], prior_mc)
            .map(|e| t - e.posterior)
            .unwrap_or(f64::INFINITY)
    };
    let dg = |p: &Point| {
        constraint_jacobian_tau(data, &base, p[0], p[1], prior_mc).unwrap_or([f64::NAN; 2])
    };

    let (lower, upper) = config.tau_bounds();
    let opts = AugLagOptions {
        xtol_rel_outer: config.xtol_rel_outer,
        max_time_seconds: config.max_time_seconds,
        inner: QuasiNewtonOptions {
            max_eval: config.max_eval,
            lower,
            upper,
            ..AugLagOptions::default().inner
        },
        ..Default::default()
    };
    let verbose = config.verbosity >= 3;
    let mut k = 0usize;
    let observe = |r: &TraceRecord| {
        if verbose {
            k += 1;
            eprintln!(
                "iteration: {k}\n\tx = ({:.6}, {:.6})\n\tf(x) = {:.6}\n\tg(x) = {:.6}",
                r.params[0].exp(),
                r.params[1],
                r.objective,
                r.constraint
            );
        }
    };
    let start = [base.tau(), base.gamma];
    let sol = auglag_solve_observed(f, df, g, dg, start, &opts, observe)?;

    let params = LloParams::from_tau(sol.point[0], sol.point[1]);
    let probs = llo_adjust(data.x(), &params);
    let mut trace = sol.trace;
    for r in &mut trace.iterations {
        r.params[0] = r.params[0].exp();
    }
    if !trace.status.is_success() {
        log::warn!(
            "boldness-recalibration stopped with status {:?}",
            trace.status
        );
    }
    Ok(BrcalResult {
        t,
        prior_mc,
        params,
        sb: sample_sd(&probs),
        posterior: t - sol.constraint,
        probs,
        trace,
        base_mles: base,
        base_fit: fit.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::gradcheck::check_gradient;
    use crate::prob::llo_compose;
    use approx::assert_abs_diff_eq;

    #[test]
    fn shortcut_hand_values() {
        let base = LloParams::new(2.0, 3.0).unwrap();
        let s = shortcut_mles(&base, &LloParams::new(4.0, 1.5).unwrap()).unwrap();
        assert_abs_diff_eq!(s.delta_prime, 0.125, epsilon = 1e-15);
        assert_abs_diff_eq!(s.gamma_prime, 2.0, epsilon = 1e-15);

        let same = shortcut_mles(&base, &LloParams::IDENTITY).unwrap();
        assert_abs_diff_eq!(same.delta_prime, 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(same.gamma_prime, 3.0, epsilon = 1e-15);

        let unit = shortcut_mles(&base, &base).unwrap();
        assert_abs_diff_eq!(unit.delta_prime, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(unit.gamma_prime, 1.0, epsilon = 1e-15);

        let zero = LloParams {
            delta: 1.0,
            gamma: 0.0,
        };
        assert!(matches!(
            shortcut_mles(&base, &zero),
            Err(Error::DegenerateGamma)
        ));
    }

    #[test]
    fn shortcut_composes_back_to_base() {
        let base = LloParams::new(0.7, 1.9).unwrap();
        for (d, g) in [(0.3, 0.5), (2.0, -1.2), (5.0, 3.0)] {
            let grid = LloParams::new(d, g).unwrap();
            let s = shortcut_mles(&base, &grid).unwrap();
            let c = llo_compose(&grid, &s.params());
            assert_abs_diff_eq!(c.delta, base.delta, epsilon = 1e-9);
            assert_abs_diff_eq!(c.gamma, base.gamma, epsilon = 1e-9);
        }
    }

    #[test]
    fn gamma_zero_objective_is_zero() {
        let d = PredictionSet::with_default_epsilon(&[0.1, 0.5, 0.8], &[0, 1, 1]).unwrap();
        let p = LloParams {
            delta: 2.0,
            gamma: 0.0,
        };
        assert_eq!(boldness_objective(&d, &p), 0.0);
        assert!(matches!(
            boldness_objective_jacobian(&d, &p),
            Err(Error::DegenerateGamma)
        ));
    }

    #[test]
    fn two_point_jacobian_by_hand() {
        // x = (0.4, 0.6), δ = γ = 1: x' = x, sd = √0.02, w = (0.24, 0.24),
        // so the δ term vanishes; z·w = (−0.0973, 0.0973) with z = ±ln 1.5.
        let d = PredictionSet::with_default_epsilon(&[0.4, 0.6], &[0, 1]).unwrap();
        let j = boldness_objective_jacobian(&d, &LloParams::IDENTITY).unwrap();
        let z = 1.5f64.ln();
        let sd = 0.02f64.sqrt();
        let s_gamma = (-0.1) * (-0.24 * z) + 0.1 * (0.24 * z);
        assert_abs_diff_eq!(j[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(j[1], -s_gamma / sd, epsilon = 1e-14);
    }

    #[test]
    fn symmetric_data_has_zero_delta_derivative() {
        let d =
            PredictionSet::with_default_epsilon(&[0.2, 0.8, 0.35, 0.65], &[0, 1, 1, 0]).unwrap();
        let j = boldness_objective_jacobian(&d, &LloParams::new(1.0, 1.7).unwrap()).unwrap();
        assert_abs_diff_eq!(j[0], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn objective_jacobian_matches_differences() {
        let d = PredictionSet::with_default_epsilon(
            &[0.05, 0.2, 0.33, 0.41, 0.58, 0.6, 0.77, 0.9],
            &[0, 0, 1, 0, 1, 1, 1, 0],
        )
        .unwrap();
        for (dl, gm) in [(0.5, 0.7), (1.3, 2.1), (3.0, -0.8)] {
            let c = check_gradient(
                |q: &Point| {
                    boldness_objective(
                        &d,
                        &LloParams {
                            delta: q[0],
                            gamma: q[1],
                        },
                    )
                },
                |q| {
                    boldness_objective_jacobian(
                        &d,
                        &LloParams {
                            delta: q[0],
                            gamma: q[1],
                        },
                    )
                    .unwrap()
                },
                &[dl, gm],
                1e-6,
                1e-6,
            );
            assert!(c.passed, "{c:?}");
        }
    }

    #[test]
    fn saturated_posterior_has_zero_jacobian() {
        let x: Vec<f64> = (1..200).map(|i| i as f64 / 200.0).collect();
        let y: Vec<u8> = x.iter().map(|&v| u8::from(v > 0.5)).collect();
        let d = PredictionSet::with_default_epsilon(&x, &y).unwrap();
        let base = LloParams::new(1.0, 8.0).unwrap();
        let far = LloParams::new(1e6, -5.0).unwrap();
        assert!(constraint_posterior(&d, &base, &far, 0.5).unwrap() < 1e-300);
        assert_eq!(
            constraint_jacobian(&d, &base, &far, 0.5).unwrap(),
            [0.0, 0.0]
        );
    }
}
