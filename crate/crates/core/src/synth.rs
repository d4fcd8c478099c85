//! Seeded synthetic prediction sets for tests and demos.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};

use crate::prob::{llo_adjust, LloParams, PredictionSet, DEFAULT_EPSILON};

/// Draws true probabilities `q ~ Beta(2, 2)`, outcomes `y ~ Bernoulli(q)`,
/// and reports `x = c(q; distortion)`.
///
/// With `distortion = LloParams::IDENTITY` the predictions are calibrated by
/// construction; otherwise the MLEs of the result estimate the inverse map.
pub fn synthetic(n: usize, distortion: LloParams, seed: u64) -> PredictionSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let beta = Beta::new(2.0, 2.0).expect("valid shape");
    loop {
        let q: Vec<f64> = (0..n).map(|_| beta.sample(&mut rng)).collect();
        let y: Vec<u8> = q.iter().map(|&p| u8::from(rng.gen::<f64>() < p)).collect();
        let x = llo_adjust(&q, &distortion);
        // redraw in the (vanishingly rare) all-one-class case
        if y.contains(&1) && y.contains(&0) {
            return PredictionSet::new(&x, &y, DEFAULT_EPSILON).expect("valid synthetic data");
        }
    }
}
