//! Probability transforms: the linear-log-odds (LLO) map, its algebra, and
//! the numerically stable logit/sigmoid helpers it is built on.
//!
//! Every LLO evaluation goes through log-odds space. The closed form
//! `δxᵞ / (δxᵞ + (1−x)ᵞ)` overflows once `|γ·logit(x)|` gets large, which the
//! optimizers routinely probe.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Machine epsilon, the default distance kept between a prediction and 0 or 1.
pub const DEFAULT_EPSILON: f64 = f64::EPSILON;

/// Natural log of the odds `x / (1 − x)`.
#[inline]
pub fn log_odds(x: f64) -> f64 {
    x.ln() - (-x).ln_1p()
}

/// Stable logistic function. Splits at zero so `exp` never overflows.
#[inline]
pub fn inv_log_odds(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + eᶻ)` without overflow.
#[inline]
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// `ln σ(z)`.
#[inline]
pub fn log_sigmoid(z: f64) -> f64 {
    -softplus(-z)
}

/// Sample standard deviation with an `n − 1` denominator.
pub fn sample_sd(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    // shifted by the first value so a constant vector gives exactly zero
    let shift = values[0];
    let mean = values.iter().map(|v| v - shift).sum::<f64>() / n as f64;
    let ss: f64 = values
        .iter()
        .map(|v| (v - shift - mean) * (v - shift - mean))
        .sum();
    (ss / (n - 1) as f64).sqrt()
}

/// Linear-log-odds parameters: `delta` shifts the log odds by `ln δ`,
/// `gamma` scales them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LloParams {
    pub delta: f64,
    pub gamma: f64,
}

impl LloParams {
    /// The calibrated model, δ = γ = 1.
    pub const IDENTITY: LloParams = LloParams {
        delta: 1.0,
        gamma: 1.0,
    };

    pub fn new(delta: f64, gamma: f64) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidInput(format!(
                "delta must be positive and finite, got {delta}"
            )));
        }
        if !gamma.is_finite() {
            return Err(Error::InvalidInput(format!(
                "gamma must be finite, got {gamma}"
            )));
        }
        Ok(Self { delta, gamma })
    }

    pub fn from_tau(tau: f64, gamma: f64) -> Self {
        Self {
            delta: tau.exp(),
            gamma,
        }
    }

    /// `τ = ln δ`, the unbounded view of the shift.
    pub fn tau(&self) -> f64 {
        self.delta.ln()
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.delta, self.gamma]
    }

    /// Adjusted log odds `ln δ + γ·z` for input log odds `z`.
    #[inline]
    pub fn shift_scale(&self, z: f64) -> f64 {
        self.tau() + self.gamma * z
    }
}

/// Clamps each value into `[epsilon, 1 − epsilon]`.
///
/// Values outside `[0, 1]` (or NaN) are rejected rather than clamped.
pub fn clamp_probs(raw: &[f64], epsilon: f64) -> Result<Vec<f64>> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::InvalidInput(format!(
            "epsilon must lie in (0, 0.5), got {epsilon}"
        )));
    }
    raw.iter()
        .enumerate()
        .map(|(index, &value)| {
            if (0.0..=1.0).contains(&value) {
                Ok(value.max(epsilon).min(1.0 - epsilon))
            } else {
                Err(Error::Domain { index, value })
            }
        })
        .collect()
}

/// LLO-adjusts a single probability.
#[inline]
pub fn llo_adjust_one(x: f64, params: &LloParams) -> f64 {
    if *params == LloParams::IDENTITY {
        return x;
    }
    inv_log_odds(params.shift_scale(log_odds(x)))
}

/// LLO-adjusts every prediction in `x`. The identity returns `x` exactly.
pub fn llo_adjust(x: &[f64], params: &LloParams) -> Vec<f64> {
    if *params == LloParams::IDENTITY {
        return x.to_vec();
    }
    let tau = params.tau();
    x.iter()
        .map(|&xi| inv_log_odds(tau + params.gamma * log_odds(xi)))
        .collect()
}

/// Single parameter pair equivalent to applying `inner` and then `outer`:
/// `(δ_out·δ_inᵞ_out, γ_in·γ_out)`.
pub fn llo_compose(inner: &LloParams, outer: &LloParams) -> LloParams {
    LloParams {
        delta: outer.delta * inner.delta.powf(outer.gamma),
        gamma: inner.gamma * outer.gamma,
    }
}

/// Paired predictions and binary outcomes.
///
/// Predictions are clamped on construction and their log odds are cached,
/// since every likelihood evaluation needs them.
#[derive(Debug, Clone)]
pub struct PredictionSet {
    x: Vec<f64>,
    y: Vec<u8>,
    logits: Vec<f64>,
    epsilon: f64,
}

impl PredictionSet {
    pub fn new(raw_x: &[f64], y: &[u8], epsilon: f64) -> Result<Self> {
        if raw_x.len() != y.len() {
            return Err(Error::InvalidInput(format!(
                "{} predictions but {} outcomes",
                raw_x.len(),
                y.len()
            )));
        }
        if raw_x.len() < 2 {
            return Err(Error::InvalidInput(
                "at least two observations are required".into(),
            ));
        }
        if let Some(i) = y.iter().position(|&v| v > 1) {
            return Err(Error::InvalidInput(format!(
                "outcome at index {i} is {}, expected 0 or 1",
                y[i]
            )));
        }
        let x = clamp_probs(raw_x, epsilon)?;
        let logits = x.iter().map(|&v| log_odds(v)).collect();
        let set = Self {
            x,
            y: y.to_vec(),
            logits,
            epsilon,
        };
        if set.constant_outcome().is_some() {
            log::warn!("all outcomes are identical; MLE fitting will be rejected");
        }
        Ok(set)
    }

    pub fn with_default_epsilon(raw_x: &[f64], y: &[u8]) -> Result<Self> {
        Self::new(raw_x, y, DEFAULT_EPSILON)
    }

    /// A new set with the same outcomes and epsilon but different predictions.
    pub fn with_predictions(&self, raw_x: &[f64]) -> Result<Self> {
        Self::new(raw_x, &self.y, self.epsilon)
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[u8] {
        &self.y
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Observed event frequency.
    pub fn base_rate(&self) -> f64 {
        self.y.iter().map(|&v| v as f64).sum::<f64>() / self.len() as f64
    }

    /// `Some(label)` when every outcome is the same.
    pub fn constant_outcome(&self) -> Option<u8> {
        let first = self.y[0];
        self.y.iter().all(|&v| v == first).then_some(first)
    }

    /// Iterator over `(log odds, outcome)` pairs.
    pub fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.logits
            .iter()
            .zip(&self.y)
            .map(|(&z, &y)| (z, y as f64))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn clamp_boundaries_and_interior() {
        let out = clamp_probs(&[0.0, 1.0], 1e-6).unwrap();
        assert_eq!(out, vec![1e-6, 1.0 - 1e-6]);
        assert_eq!(clamp_probs(&[0.5], 1e-6).unwrap(), vec![0.5]);
    }

    #[test]
    fn clamp_rejects_out_of_range() {
        match clamp_probs(&[0.3, 1.2], 1e-6) {
            Err(Error::Domain { index, .. }) => assert_eq!(index, 1),
            other => panic!("expected domain error, got {other:?}"),
        }
        assert!(clamp_probs(&[f64::NAN], 1e-6).is_err());
        assert!(clamp_probs(&[0.5], 0.0).is_err());
    }

    #[test]
    fn llo_hand_values() {
        let id = LloParams::IDENTITY;
        assert_abs_diff_eq!(llo_adjust_one(0.5, &id), 0.5, epsilon = 1e-15);
        let shift = LloParams::new(2.0, 1.0).unwrap();
        assert_abs_diff_eq!(llo_adjust_one(0.5, &shift), 2.0 / 3.0, epsilon = 1e-15);
        let scale = LloParams::new(1.0, 2.0).unwrap();
        assert_abs_diff_eq!(llo_adjust_one(0.7, &scale), 0.49 / 0.58, epsilon = 1e-14);
    }

    #[test]
    fn llo_matches_printed_foreclosure_rows() {
        // first rows of the foreclosure data and their 95% boldness-recalibrated values
        let x = [
            0.1155925, 0.3856198, 0.1273048, 0.4212137, 0.2623377, 0.5727253,
        ];
        let expected = [
            0.4069886, 0.8627809, 0.4448838, 0.8856910, 0.7381995, 0.9483221,
        ];
        let params = LloParams::new(12.134803, 1.411657).unwrap();
        for (got, want) in llo_adjust(&x, &params).iter().zip(expected) {
            assert_abs_diff_eq!(*got, want, epsilon = 2e-7);
        }
    }

    #[test]
    fn llo_is_stable_for_extreme_gamma() {
        let p = LloParams::new(1e3, 500.0).unwrap();
        let out = llo_adjust(&[1e-10, 0.5, 1.0 - 1e-10], &p);
        assert!(out.iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v)));
        assert!(out[0] < 1e-100 && out[2] == 1.0);
    }

    #[test]
    fn gamma_zero_collapses() {
        let p = LloParams::new(3.0, 0.0).unwrap();
        for v in llo_adjust(&[0.01, 0.3, 0.99], &p) {
            assert_abs_diff_eq!(v, 0.75, epsilon = 1e-15);
        }
    }

    #[test]
    fn compose_hand_values() {
        let d = LloParams::new(1.7, -0.4).unwrap();
        assert_eq!(llo_compose(&LloParams::IDENTITY, &d), d);
        let c = llo_compose(
            &LloParams::new(2.0, 1.0).unwrap(),
            &LloParams::new(1.0, 2.0).unwrap(),
        );
        assert_abs_diff_eq!(c.delta, 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.gamma, 2.0, epsilon = 1e-15);
        // inverse pair: (δ^(−1/γ), 1/γ) undoes (δ, γ)
        let inner = LloParams::new(2.5, 1.6).unwrap();
        let inv = LloParams::new(inner.delta.powf(-1.0 / inner.gamma), 1.0 / inner.gamma).unwrap();
        let c = llo_compose(&inner, &inv);
        assert_abs_diff_eq!(c.delta, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(c.gamma, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn logit_sigmoid_pairs() {
        assert_eq!(log_odds(0.5), 0.0);
        assert_eq!(inv_log_odds(0.0), 0.5);
        let tiny = inv_log_odds(-800.0);
        assert!((0.0..=1e-300).contains(&tiny));
        assert!((inv_log_odds(-700.0) - (-700.0f64).exp()).abs() < 1e-310);
        assert_eq!(inv_log_odds(800.0), 1.0);
    }

    #[test]
    fn softplus_and_log_sigmoid() {
        assert_abs_diff_eq!(softplus(0.0), 2f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(softplus(800.0), 800.0, epsilon = 1e-12);
        assert!(softplus(-800.0) >= 0.0);
        assert_abs_diff_eq!(log_sigmoid(-800.0), -800.0, epsilon = 1e-12);
    }

    #[test]
    fn prediction_set_validation() {
        assert!(PredictionSet::with_default_epsilon(&[0.5], &[1]).is_err());
        assert!(PredictionSet::with_default_epsilon(&[0.5, 0.4], &[1]).is_err());
        assert!(PredictionSet::with_default_epsilon(&[0.5, 0.4], &[1, 2]).is_err());
        let s = PredictionSet::with_default_epsilon(&[0.0, 1.0, 0.5], &[0, 1, 1]).unwrap();
        assert_eq!(s.x()[0], f64::EPSILON);
        assert_eq!(s.x()[1], 1.0 - f64::EPSILON);
        assert!(s.logits().iter().all(|z| z.is_finite()));
        assert_abs_diff_eq!(s.base_rate(), 2.0 / 3.0, epsilon = 1e-15);
        assert_eq!(s.constant_outcome(), None);
        let c = PredictionSet::with_default_epsilon(&[0.2, 0.4], &[1, 1]).unwrap();
        assert_eq!(c.constant_outcome(), Some(1));
    }

    #[test]
    fn sample_sd_small() {
        assert_abs_diff_eq!(sample_sd(&[1.0, 3.0]), 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!(sample_sd(&[0.4, 0.4, 0.4]), 0.0);
    }

    proptest! {
        #[test]
        fn complement_identity(x in 1e-6f64..(1.0 - 1e-6), tau in -5f64..5.0, gamma in -4f64..4.0) {
            let p = LloParams::from_tau(tau, gamma);
            let q = LloParams::new(1.0 / p.delta, gamma).unwrap();
            let lhs = 1.0 - llo_adjust_one(x, &p);
            let rhs = llo_adjust_one(1.0 - x, &q);
            prop_assert!((lhs - rhs).abs() <= 1e-12);
        }

        // The nested side round-trips through a probability, and `1 − x'`
        // loses digits once x' saturates, so the intermediate log odds are
        // kept under ~8 in magnitude.
        #[test]
        fn composition_identity(
            x in 0.01f64..0.99,
            t1 in -1f64..1.0, g1 in -1.5f64..1.5,
            t2 in -3f64..3.0, g2 in -3f64..3.0,
        ) {
            let inner = LloParams::from_tau(t1, g1);
            let outer = LloParams::from_tau(t2, g2);
            let nested = llo_adjust_one(llo_adjust_one(x, &inner), &outer);
            let composed = llo_adjust_one(x, &llo_compose(&inner, &outer));
            prop_assert!((nested - composed).abs() <= 1e-12);
        }

        #[test]
        fn increasing_for_positive_gamma(
            a in 1e-6f64..(1.0 - 1e-6), b in 1e-6f64..(1.0 - 1e-6),
            tau in -3f64..3.0, gamma in 0.05f64..4.0,
        ) {
            prop_assume!((a - b).abs() > 1e-6);
            let p = LloParams::from_tau(tau, gamma);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(llo_adjust_one(lo, &p) < llo_adjust_one(hi, &p));
        }

        #[test]
        fn clamp_idempotent(v in proptest::collection::vec(0f64..=1.0, 1..20), eps in 1e-12f64..0.1) {
            let once = clamp_probs(&v, eps).unwrap();
            let twice = clamp_probs(&once, eps).unwrap();
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn logit_round_trip(x in 1e-9f64..(1.0 - 1e-9)) {
            prop_assert!((inv_log_odds(log_odds(x)) - x).abs() <= 1e-12);
        }
    }
}
