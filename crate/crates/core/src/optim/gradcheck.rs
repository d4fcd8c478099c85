//! Central finite-difference gradient checks.

use super::Point;

#[derive(Debug, Clone)]
pub struct GradientCheck {
    pub analytic: Point,
    pub numeric: Point,
    /// Largest per-component relative error.
    pub max_rel_error: f64,
    pub passed: bool,
}

/// Central differences with absolute step `h` in each coordinate.
pub fn central_gradient<F>(mut f: F, at: &Point, h: f64) -> Point
where
    F: FnMut(&Point) -> f64,
{
    let mut out = [0.0; 2];
    for (i, slot) in out.iter_mut().enumerate() {
        let mut hi = *at;
        let mut lo = *at;
        hi[i] += h;
        lo[i] -= h;
        *slot = (f(&hi) - f(&lo)) / (2.0 * h);
    }
    out
}

/// Relative error `|a − b| / max(|a|, |b|, floor)`; the floor keeps
/// near-zero components from dominating.
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Compares `grad(at)` against central differences of `f`.
pub fn check_gradient<F, G>(f: F, grad: G, at: &Point, h: f64, tol: f64) -> GradientCheck
where
    F: FnMut(&Point) -> f64,
    G: FnOnce(&Point) -> Point,
{
    let numeric = central_gradient(f, at, h);
    let analytic = grad(at);
    let scale = analytic
        .iter()
        .chain(&numeric)
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    let floor = (scale * 1e-3).max(1e-8);
    let max_rel_error = (0..2)
        .map(|i| relative_error(analytic[i], numeric[i], floor))
        .fold(0.0, f64::max);
    GradientCheck {
        analytic,
        numeric,
        max_rel_error,
        passed: max_rel_error <= tol,
    }
}
