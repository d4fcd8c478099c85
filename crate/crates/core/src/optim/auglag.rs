//! Augmented Lagrangian for `min f(p)` subject to a single `g(p) ≤ 0`.
//!
//! The inner stage minimizes
//! `L(p; λ, ρ) = f(p) + (ρ/2)·max(0, λ/ρ + g(p))² − λ²/(2ρ)`
//! with the quasi-Newton engine. The outer stage updates the multiplier
//! `λ ← max(0, λ + ρ·g(p))` and multiplies `ρ` by `rho_growth` whenever the
//! constraint violation fails to shrink by `violation_shrink`.

use std::cell::RefCell;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{
    quasi_newton_observed, small_relative_change, Deadline, Point, QuasiNewtonOptions, Status,
};

#[derive(Debug, Clone, PartialEq)]
pub struct AugLagOptions {
    pub rho0: f64,
    pub rho_growth: f64,
    /// Required factor by which the violation must drop between outer steps.
    pub violation_shrink: f64,
    pub lambda0: f64,
    pub xtol_rel_outer: f64,
    pub max_outer: usize,
    /// Largest `g` accepted as feasible at termination.
    pub feasibility_tol: f64,
    /// Starting points with `g` above this are rejected outright.
    pub max_start_violation: f64,
    pub inner: QuasiNewtonOptions,
    pub max_time_seconds: Option<f64>,
}

impl Default for AugLagOptions {
    fn default() -> Self {
        Self {
            rho0: 10.0,
            rho_growth: 10.0,
            violation_shrink: 0.25,
            lambda0: 0.0,
            xtol_rel_outer: 1e-6,
            max_outer: 100,
            feasibility_tol: 1e-6,
            max_start_violation: 0.1,
            inner: QuasiNewtonOptions {
                max_eval: 500,
                grad_tol: 1e-10,
                xtol_rel: 1e-12,
                ..Default::default()
            },
            max_time_seconds: None,
        }
    }
}

/// One accepted point: solver coordinates, objective and constraint values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub params: Point,
    pub objective: f64,
    pub constraint: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstrainedSolveTrace {
    pub iterations: Vec<TraceRecord>,
    pub status: Status,
    pub penalty_history: Vec<f64>,
    pub multiplier_history: Vec<f64>,
    pub outer_iterations: usize,
    pub evaluations: usize,
    /// Set when the final point was pulled back onto the feasible side along
    /// the segment to the (feasible) start.
    pub restored: bool,
}

#[derive(Debug, Clone)]
pub struct ConstrainedSolution {
    pub point: Point,
    pub objective: f64,
    pub constraint: f64,
    pub multiplier: f64,
    pub trace: ConstrainedSolveTrace,
}

pub fn auglag_solve<F, DF, G, DG>(
    f: F,
    df: DF,
    g: G,
    dg: DG,
    start: Point,
    opts: &AugLagOptions,
) -> Result<ConstrainedSolution>
where
    F: Fn(&Point) -> f64,
    DF: Fn(&Point) -> Point,
    G: Fn(&Point) -> f64,
    DG: Fn(&Point) -> Point,
{
    auglag_solve_observed(f, df, g, dg, start, opts, |_| {})
}

/// [`auglag_solve`] with a callback on every trace record as it is produced.
pub fn auglag_solve_observed<F, DF, G, DG, O>(
    f: F,
    df: DF,
    g: G,
    dg: DG,
    start: Point,
    opts: &AugLagOptions,
    observe: O,
) -> Result<ConstrainedSolution>
where
    F: Fn(&Point) -> f64,
    DF: Fn(&Point) -> Point,
    G: Fn(&Point) -> f64,
    DG: Fn(&Point) -> Point,
    O: FnMut(&TraceRecord),
{
    let g_start = g(&start);
    let f_start = f(&start);
    if !g_start.is_finite() || !f_start.is_finite() {
        return Err(Error::SolverFailure(
            "objective or constraint not finite at the starting point".into(),
        ));
    }
    if g_start > opts.max_start_violation {
        return Err(Error::InfeasibleStart(g_start));
    }

    let deadline = Deadline::after(opts.max_time_seconds);
    let observe = RefCell::new(observe);
    let records = RefCell::new(Vec::new());
    let push = |params: Point, objective: f64, constraint: f64| {
        let rec = TraceRecord {
            params,
            objective,
            constraint,
        };
        (observe.borrow_mut())(&rec);
        records.borrow_mut().push(rec);
    };
    push(start, f_start, g_start);

    let mut x = start;
    let mut lambda = opts.lambda0;
    let mut rho = opts.rho0;
    let mut prev_violation = f64::INFINITY;
    let mut penalty_history = vec![rho];
    let mut multiplier_history = vec![lambda];
    let mut evaluations = 0;
    let mut retried = false;
    let mut outer = 0;
    let mut xtol_met = false;

    let status = loop {
        if outer >= opts.max_outer {
            break Status::MaxEval;
        }
        if deadline.expired() {
            break Status::MaxTime;
        }
        outer += 1;

        let (lam, r) = (lambda, rho);
        let lagrangian = |p: &Point| {
            let fv = f(p);
            let gv = g(p);
            let shifted = (lam / r + gv).max(0.0);
            fv + 0.5 * r * shifted * shifted - lam * lam / (2.0 * r)
        };
        let lagrangian_grad = |p: &Point| {
            let gf = df(p);
            let weight = (lam + r * g(p)).max(0.0);
            if weight == 0.0 {
                gf
            } else {
                let gg = dg(p);
                [gf[0] + weight * gg[0], gf[1] + weight * gg[1]]
            }
        };
        let mut inner_opts = opts.inner.clone();
        inner_opts.max_time_seconds = opts.max_time_seconds;
        let inner = quasi_newton_observed(lagrangian, lagrangian_grad, x, &inner_opts, |p, _| {
            if *p != x {
                push(*p, f(p), g(p));
            }
        })?;
        evaluations += inner.evaluations;
        if inner.status == Status::Failure && inner.point == x {
            if retried {
                break Status::Failure;
            }
            retried = true;
            rho *= 2.0;
            penalty_history.push(rho);
            continue;
        }

        let x_new = inner.point;
        let g_new = g(&x_new);
        let violation = g_new.max(-lambda / rho).abs();
        lambda = (lambda + rho * g_new).max(0.0);
        if violation > opts.violation_shrink * prev_violation {
            rho *= opts.rho_growth;
        }
        prev_violation = violation;
        penalty_history.push(rho);
        multiplier_history.push(lambda);

        let settled = small_relative_change(&x, &x_new, opts.xtol_rel_outer);
        x = x_new;
        if settled {
            xtol_met = true;
            if g_new <= opts.feasibility_tol {
                break Status::XtolReached;
            }
        }
        if inner.status == Status::MaxTime {
            break Status::MaxTime;
        }
    };

    let mut restored = false;
    let mut constraint = g(&x);
    if xtol_met && constraint > opts.feasibility_tol && g_start <= 0.0 {
        // bisect toward the feasible start for the last point with g ≤ 0
        let (mut lo, mut hi) = (0.0, 1.0);
        let at = |s: f64| {
            [
                start[0] + s * (x[0] - start[0]),
                start[1] + s * (x[1] - start[1]),
            ]
        };
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if g(&at(mid)) <= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        x = at(lo);
        constraint = g(&x);
        restored = true;
        push(x, f(&x), constraint);
    }
    let status = if restored && status != Status::Failure {
        Status::XtolReached
    } else {
        status
    };

    let objective = f(&x);
    if let Some(last) = records.borrow().last() {
        if last.params != x {
            push(x, objective, constraint);
        }
    }
    Ok(ConstrainedSolution {
        point: x,
        objective,
        constraint,
        multiplier: lambda,
        trace: ConstrainedSolveTrace {
            iterations: records.into_inner(),
            status,
            penalty_history,
            multiplier_history,
            outer_iterations: outer,
            evaluations,
            restored,
        },
    })
}
