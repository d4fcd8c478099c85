//! Analytic derivatives against central finite differences.

use boldrecal::boldness::{
    boldness_objective, boldness_objective_jacobian, constraint_jacobian, constraint_posterior,
};
use boldrecal::likelihood::{fit_mle, neg_log_likelihood, nll_gradient, Parameterization};
use boldrecal::optim::gradcheck::check_gradient;
use boldrecal::optim::{OptimizerConfig, Point};
use boldrecal::synth::synthetic;
use boldrecal::{LloParams, PredictionSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STEP: f64 = 1e-6;

fn p(q: &Point) -> LloParams {
    LloParams {
        delta: q[0],
        gamma: q[1],
    }
}

fn datasets(rng: &mut ChaCha8Rng) -> Vec<PredictionSet> {
    (0..5)
        .map(|s| {
            let d = LloParams::new(rng.gen_range(0.3..3.0), rng.gen_range(0.5..2.0)).unwrap();
            synthetic(300, d, 100 + s)
        })
        .collect()
}

fn points(rng: &mut ChaCha8Rng) -> Vec<Point> {
    (0..50)
        .map(|_| [rng.gen_range(0.2..4.0), rng.gen_range(0.2..3.0)])
        .collect()
}

#[test]
fn likelihood_gradient_in_both_parameterizations() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for data in datasets(&mut rng) {
        for q in points(&mut rng) {
            let c = check_gradient(
                |q| neg_log_likelihood(&data, &p(q)).unwrap(),
                |q| nll_gradient(&data, &p(q), Parameterization::Delta).unwrap(),
                &q,
                STEP,
                1e-5,
            );
            assert!(c.passed, "delta form at {q:?}: {c:?}");
            let t = [q[0].ln(), q[1]];
            let c = check_gradient(
                |t| neg_log_likelihood(&data, &LloParams::from_tau(t[0], t[1])).unwrap(),
                |t| {
                    nll_gradient(
                        &data,
                        &LloParams::from_tau(t[0], t[1]),
                        Parameterization::Tau,
                    )
                    .unwrap()
                },
                &t,
                STEP,
                1e-5,
            );
            assert!(c.passed, "tau form at {t:?}: {c:?}");
        }
    }
}

#[test]
fn boldness_jacobian() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for data in datasets(&mut rng) {
        for q in points(&mut rng) {
            let c = check_gradient(
                |q| boldness_objective(&data, &p(q)),
                |q| boldness_objective_jacobian(&data, &p(q)).unwrap(),
                &q,
                STEP,
                1e-4,
            );
            assert!(c.passed, "at {q:?}: {c:?}");
        }
    }
}

#[test]
fn constraint_jacobian_is_negated_posterior_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let config = OptimizerConfig::default();
    for data in datasets(&mut rng) {
        let base = fit_mle(&data, &config).unwrap().params;
        for q in points(&mut rng) {
            let c = check_gradient(
                |q| -constraint_posterior(&data, &base, &p(q), 0.5).unwrap(),
                |q| constraint_jacobian(&data, &base, &p(q), 0.5).unwrap(),
                &q,
                STEP,
                1e-4,
            );
            assert!(c.passed, "at {q:?}: {c:?}");
        }
    }
}

#[test]
fn likelihood_gradient_vanishes_at_the_fit() {
    let config = OptimizerConfig::default();
    for seed in 0..5 {
        let data = synthetic(400, LloParams::new(1.5, 0.7).unwrap(), seed);
        let fit = fit_mle(&data, &config).unwrap();
        let g = nll_gradient(&data, &fit.params, Parameterization::Tau).unwrap();
        assert!(g[0].abs() < 1e-3 && g[1].abs() < 1e-3, "{g:?}");
    }
}
