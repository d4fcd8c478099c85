use crate::error::{Error, Result};

use super::{Deadline, Minimum, Point, Status};

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadOptions {
    pub max_eval: usize,
    /// Stop once every vertex is within this ∞-norm distance of the best one.
    pub diameter_tol: f64,
    /// Initial edge length as a fraction of `max(|x_i|, 1)`.
    pub initial_step: f64,
    pub max_time_seconds: Option<f64>,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_eval: 1000,
            diameter_tol: 1e-8,
            initial_step: 0.1,
            max_time_seconds: None,
        }
    }
}

/// Simplex minimization with coefficients (1, 2, ½, ½).
///
/// Non-finite values are treated as `+∞`, which pushes the simplex back
/// toward the finite region through contraction and shrink steps.
pub fn nelder_mead<F>(mut f: F, start: Point, opts: &NelderMeadOptions) -> Result<Minimum>
where
    F: FnMut(&Point) -> f64,
{
    let first = f(&start);
    if !first.is_finite() {
        return Err(Error::SolverFailure(format!(
            "objective is not finite at the starting point ({}, {})",
            start[0], start[1]
        )));
    }
    let deadline = Deadline::after(opts.max_time_seconds);
    let mut evaluations = 1;
    let mut non_finite = 0;
    let mut eval = |p: &Point, evaluations: &mut usize, non_finite: &mut usize| {
        *evaluations += 1;
        let v = f(p);
        if v.is_finite() {
            v
        } else {
            *non_finite += 1;
            f64::INFINITY
        }
    };

    let mut simplex: Vec<(Point, f64)> = vec![(start, first)];
    for i in 0..2 {
        let mut p = start;
        p[i] += opts.initial_step * start[i].abs().max(1.0);
        let v = eval(&p, &mut evaluations, &mut non_finite);
        simplex.push((p, v));
    }

    let mut trace = Vec::new();
    let mut iterations = 0;
    let status = loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0];
        trace.push(best);
        let diameter = simplex[1..]
            .iter()
            .map(|(p, _)| (p[0] - best.0[0]).abs().max((p[1] - best.0[1]).abs()))
            .fold(0.0, f64::max);
        if diameter <= opts.diameter_tol {
            break Status::Converged;
        }
        if evaluations >= opts.max_eval {
            break Status::MaxEval;
        }
        if deadline.expired() {
            break Status::MaxTime;
        }
        iterations += 1;

        let worst = simplex[2];
        let second = simplex[1].1;
        let centroid = [
            0.5 * (simplex[0].0[0] + simplex[1].0[0]),
            0.5 * (simplex[0].0[1] + simplex[1].0[1]),
        ];
        let along = |coef: f64| -> Point {
            [
                centroid[0] + coef * (centroid[0] - worst.0[0]),
                centroid[1] + coef * (centroid[1] - worst.0[1]),
            ]
        };

        let reflected = along(REFLECT);
        let fr = eval(&reflected, &mut evaluations, &mut non_finite);
        if fr < best.1 {
            let expanded = along(REFLECT * EXPAND);
            let fe = eval(&expanded, &mut evaluations, &mut non_finite);
            simplex[2] = if fe < fr {
                (expanded, fe)
            } else {
                (reflected, fr)
            };
            continue;
        }
        if fr < second {
            simplex[2] = (reflected, fr);
            continue;
        }
        let (contracted, accept_below) = if fr < worst.1 {
            (along(REFLECT * CONTRACT), fr)
        } else {
            (along(-CONTRACT), worst.1)
        };
        let fc = eval(&contracted, &mut evaluations, &mut non_finite);
        if fc < accept_below || (fc <= accept_below && fr < worst.1) {
            simplex[2] = (contracted, fc);
            continue;
        }
        let anchor = simplex[0].0;
        for vertex in simplex.iter_mut().skip(1) {
            let p = [
                anchor[0] + SHRINK * (vertex.0[0] - anchor[0]),
                anchor[1] + SHRINK * (vertex.0[1] - anchor[1]),
            ];
            *vertex = (p, eval(&p, &mut evaluations, &mut non_finite));
        }
    };

    let (point, value) = simplex[0];
    if non_finite > 0 {
        log::debug!("nelder-mead saw {non_finite} non-finite evaluations");
    }
    Ok(Minimum {
        point,
        value,
        status,
        iterations,
        evaluations,
        trace,
        non_finite_evaluations: non_finite,
    })
}
