//! Self-contained minimizers over two parameters.
//!
//! * [`nelder_mead`]: derivative-free simplex search.
//! * [`quasi_newton`]: BFGS with a backtracking Armijo line search.
//! * [`auglag_solve`]: augmented Lagrangian for one inequality constraint
//!   `g(p) ≤ 0`, using the quasi-Newton engine for its inner stage.
//!
//! All solvers are deterministic: identical inputs give identical traces.

mod auglag;
pub mod gradcheck;
mod nelder_mead;
mod quasi_newton;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

pub use auglag::{
    auglag_solve, auglag_solve_observed, AugLagOptions, ConstrainedSolution, ConstrainedSolveTrace,
    TraceRecord,
};
pub use nelder_mead::{nelder_mead, NelderMeadOptions};
pub use quasi_newton::{quasi_newton, quasi_newton_observed, QuasiNewtonOptions};

pub type Point = [f64; 2];

/// Why a solver stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    /// Unconstrained tolerance met (simplex size, gradient norm or step size).
    Converged,
    /// Relative parameter change across outer iterations fell below tolerance
    /// at a feasible point.
    XtolReached,
    MaxEval,
    MaxTime,
    Failure,
}

impl Status {
    pub fn is_success(self) -> bool {
        matches!(self, Status::Converged | Status::XtolReached)
    }
}

/// Algorithm used to fit the LLO maximum-likelihood estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum MleAlgorithm {
    #[default]
    NelderMead,
    QuasiNewtonGrad,
}

/// User-facing solver settings shared by fitting and boldness-recalibration.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub algorithm: MleAlgorithm,
    /// Evaluation budget for each inner constrained solve.
    pub max_eval: usize,
    pub xtol_rel_outer: f64,
    pub xtol_rel_inner: f64,
    pub max_time_seconds: Option<f64>,
    /// Lower bounds on (δ, γ).
    pub lower_bounds: Point,
    /// Upper bounds on (δ, γ).
    pub upper_bounds: Point,
    /// 3 and above streams the constrained iteration log to stderr.
    pub verbosity: u8,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            algorithm: MleAlgorithm::NelderMead,
            max_eval: 500,
            xtol_rel_outer: 1e-6,
            xtol_rel_inner: 1e-6,
            max_time_seconds: None,
            lower_bounds: [1e-5, f64::NEG_INFINITY],
            upper_bounds: [f64::INFINITY, f64::INFINITY],
            verbosity: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> crate::Result<()> {
        let bad = |m: &str| Err(crate::Error::InvalidInput(m.to_string()));
        if !(self.xtol_rel_outer > 0.0) || !(self.xtol_rel_inner > 0.0) {
            return bad("tolerances must be positive");
        }
        if self.max_eval == 0 {
            return bad("max_eval must be at least 1");
        }
        if let Some(t) = self.max_time_seconds {
            if !(t > 0.0) {
                return bad("max_time must be positive");
            }
        }
        if !(self.lower_bounds[0] >= 0.0) {
            return bad("the lower bound on delta must be non-negative");
        }
        if self.lower_bounds[0] >= self.upper_bounds[0]
            || self.lower_bounds[1] >= self.upper_bounds[1]
        {
            return bad("lower bounds must be below upper bounds");
        }
        Ok(())
    }

    /// Bounds mapped into (τ, γ) coordinates.
    pub fn tau_bounds(&self) -> (Point, Point) {
        (
            [self.lower_bounds[0].ln(), self.lower_bounds[1]],
            [self.upper_bounds[0].ln(), self.upper_bounds[1]],
        )
    }
}

/// Result of an unconstrained minimization.
#[derive(Debug, Clone)]
pub struct Minimum {
    pub point: Point,
    pub value: f64,
    pub status: Status,
    pub iterations: usize,
    pub evaluations: usize,
    /// Best `(point, value)` after each iteration.
    pub trace: Vec<(Point, f64)>,
    /// Evaluations that returned a non-finite value.
    pub non_finite_evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Deadline(Option<Instant>);

impl Deadline {
    pub(crate) fn after(seconds: Option<f64>) -> Self {
        Deadline(seconds.map(|s| Instant::now() + Duration::from_secs_f64(s)))
    }

    pub(crate) fn expired(&self) -> bool {
        self.0.is_some_and(|d| Instant::now() >= d)
    }
}

pub(crate) fn project(p: Point, lower: &Point, upper: &Point) -> Point {
    [
        p[0].clamp(lower[0], upper[0]),
        p[1].clamp(lower[1], upper[1]),
    ]
}

pub(crate) fn norm_inf(v: &Point) -> f64 {
    v[0].abs().max(v[1].abs())
}

pub(crate) fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// `|new − old| ≤ tol·|new|` in every coordinate (with a tiny absolute floor).
pub(crate) fn small_relative_change(old: &Point, new: &Point, tol: f64) -> bool {
    old.iter()
        .zip(new)
        .all(|(a, b)| (b - a).abs() <= tol * b.abs() + 1e-14)
}
