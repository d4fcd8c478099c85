use crate::error::{Error, Result};

use super::{dot, norm_inf, project, small_relative_change, Deadline, Minimum, Point, Status};

const ARMIJO_C1: f64 = 1e-4;
const BACKTRACK: f64 = 0.5;
const MAX_BACKTRACKS: usize = 60;

#[derive(Debug, Clone, PartialEq)]
pub struct QuasiNewtonOptions {
    pub max_iter: usize,
    pub max_eval: usize,
    /// Stop when the gradient ∞-norm falls below this.
    pub grad_tol: f64,
    /// Stop when the accepted step is this small relative to the iterate.
    pub xtol_rel: f64,
    /// Longest step (∞-norm) a single line search may attempt.
    pub max_step: f64,
    pub lower: Point,
    pub upper: Point,
    pub max_time_seconds: Option<f64>,
}

impl Default for QuasiNewtonOptions {
    fn default() -> Self {
        Self {
            max_iter: 1000,
            max_eval: 5000,
            grad_tol: 1e-8,
            xtol_rel: 1e-10,
            max_step: 10.0,
            lower: [f64::NEG_INFINITY; 2],
            upper: [f64::INFINITY; 2],
            max_time_seconds: None,
        }
    }
}

/// BFGS minimization with a backtracking Armijo line search.
pub fn quasi_newton<F, G>(f: F, grad: G, start: Point, opts: &QuasiNewtonOptions) -> Result<Minimum>
where
    F: FnMut(&Point) -> f64,
    G: FnMut(&Point) -> Point,
{
    quasi_newton_observed(f, grad, start, opts, |_, _| {})
}

/// [`quasi_newton`] with a callback invoked on the start and on every
/// accepted iterate.
pub fn quasi_newton_observed<F, G, O>(
    mut f: F,
    mut grad: G,
    start: Point,
    opts: &QuasiNewtonOptions,
    mut observe: O,
) -> Result<Minimum>
where
    F: FnMut(&Point) -> f64,
    G: FnMut(&Point) -> Point,
    O: FnMut(&Point, f64),
{
    let deadline = Deadline::after(opts.max_time_seconds);
    let mut x = project(start, &opts.lower, &opts.upper);
    let mut fx = f(&x);
    let mut gx = grad(&x);
    let mut evaluations = 1;
    if !fx.is_finite() || !gx.iter().all(|v| v.is_finite()) {
        return Err(Error::SolverFailure(format!(
            "objective or gradient not finite at the starting point ({}, {})",
            x[0], x[1]
        )));
    }
    observe(&x, fx);

    // inverse Hessian approximation, row-major 2x2
    let mut h = [1.0, 0.0, 0.0, 1.0];
    let mut scaled = false;
    let mut trace = vec![(x, fx)];
    let mut iterations = 0;
    let mut non_finite = 0;

    let status = loop {
        if norm_inf(&gx) <= opts.grad_tol {
            break Status::Converged;
        }
        if iterations >= opts.max_iter || evaluations >= opts.max_eval {
            break Status::MaxEval;
        }
        if deadline.expired() {
            break Status::MaxTime;
        }
        iterations += 1;

        let mut d = [
            -(h[0] * gx[0] + h[1] * gx[1]),
            -(h[2] * gx[0] + h[3] * gx[1]),
        ];
        let mut slope = dot(&d, &gx);
        if !(slope < 0.0) {
            h = [1.0, 0.0, 0.0, 1.0];
            scaled = false;
            d = [-gx[0], -gx[1]];
            slope = dot(&d, &gx);
        }
        let len = norm_inf(&d);
        if len > opts.max_step {
            let s = opts.max_step / len;
            d = [d[0] * s, d[1] * s];
            slope *= s;
        }

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial = project(
                [x[0] + alpha * d[0], x[1] + alpha * d[1]],
                &opts.lower,
                &opts.upper,
            );
            let ft = f(&trial);
            evaluations += 1;
            if !ft.is_finite() {
                non_finite += 1;
            } else if ft <= fx + ARMIJO_C1 * alpha * slope
                || (trial != x && ft < fx && alpha < 1e-6)
            {
                accepted = Some((trial, ft));
                break;
            }
            alpha *= BACKTRACK;
        }
        let Some((x_new, f_new)) = accepted else {
            break Status::Failure;
        };
        let g_new = grad(&x_new);
        if !g_new.iter().all(|v| v.is_finite()) {
            break Status::Failure;
        }

        let s = [x_new[0] - x[0], x_new[1] - x[1]];
        let y = [g_new[0] - gx[0], g_new[1] - gx[1]];
        let sy = dot(&s, &y);
        let step_small = small_relative_change(&x, &x_new, opts.xtol_rel);
        x = x_new;
        fx = f_new;
        gx = g_new;
        trace.push((x, fx));
        observe(&x, fx);
        if step_small {
            break Status::Converged;
        }

        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if !scaled {
                let gamma = sy / dot(&y, &y);
                h = [gamma, 0.0, 0.0, gamma];
                scaled = true;
            }
            let rho = 1.0 / sy;
            // H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ
            let hy = [h[0] * y[0] + h[1] * y[1], h[2] * y[0] + h[3] * y[1]];
            let yhy = dot(&y, &hy);
            let coef = rho * rho * yhy + rho;
            h = [
                h[0] - rho * (hy[0] * s[0] + s[0] * hy[0]) + coef * s[0] * s[0],
                h[1] - rho * (hy[0] * s[1] + s[0] * hy[1]) + coef * s[0] * s[1],
                h[2] - rho * (hy[1] * s[0] + s[1] * hy[0]) + coef * s[1] * s[0],
                h[3] - rho * (hy[1] * s[1] + s[1] * hy[1]) + coef * s[1] * s[1],
            ];
        }
    };

    Ok(Minimum {
        point: x,
        value: fx,
        status,
        iterations,
        evaluations,
        trace,
        non_finite_evaluations: non_finite,
    })
}
