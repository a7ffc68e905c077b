//! Limited-memory BFGS with a strong-Wolfe line search.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy)]
pub struct LbfgsOptions {
    pub max_iterations: usize,
    /// Stop once `‖∇f‖∞` falls to this value.
    pub grad_tol: f64,
    pub memory: usize,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            grad_tol: 1e-6,
            memory: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LbfgsExit {
    Converged,
    MaxIterations,
    /// No further decrease along a descent direction, typically at the
    /// floating-point floor.
    LineSearchFailed,
}

#[derive(Debug, Clone, Copy)]
pub struct LbfgsReport {
    pub iterations: usize,
    pub evaluations: usize,
    pub value: f64,
    pub grad_inf: f64,
    pub exit: LbfgsExit,
}

const C1: f64 = 1e-4;
const C2: f64 = 0.9;
const MAX_LINE_EVALS: usize = 30;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

struct Point {
    alpha: f64,
    value: f64,
    slope: f64,
}

/// Minimizes `f`, which returns the value and writes the gradient into its
/// second argument. `x` holds the starting point on entry and the final
/// iterate on exit.
pub fn minimize<F>(mut f: F, x: &mut [f64], options: &LbfgsOptions) -> LbfgsReport
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x.len();
    let mut g = vec![0.0; n];
    let mut value = f(x, &mut g);
    let mut evaluations = 1;
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut d = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut g_trial = vec![0.0; n];
    let mut alpha_buf = Vec::with_capacity(options.memory);

    let mut iterations = 0;
    let mut retried = false;
    loop {
        let grad_inf = inf_norm(&g);
        if grad_inf <= options.grad_tol || n == 0 {
            return LbfgsReport {
                iterations,
                evaluations,
                value,
                grad_inf,
                exit: LbfgsExit::Converged,
            };
        }
        if iterations >= options.max_iterations {
            return LbfgsReport {
                iterations,
                evaluations,
                value,
                grad_inf,
                exit: LbfgsExit::MaxIterations,
            };
        }

        // two-loop recursion
        d.copy_from_slice(&g);
        alpha_buf.clear();
        for (s, y, rho) in history.iter().rev() {
            let a = rho * dot(s, &d);
            for (di, yi) in d.iter_mut().zip(y) {
                *di -= a * yi;
            }
            alpha_buf.push(a);
        }
        let gamma = history
            .back()
            .map_or(1.0 / dot(&g, &g).sqrt().max(1e-300), |(s, y, _)| dot(s, y) / dot(y, y));
        for di in d.iter_mut() {
            *di *= gamma;
        }
        for ((s, y, rho), a) in history.iter().zip(alpha_buf.iter().rev()) {
            let b = rho * dot(y, &d);
            for (di, si) in d.iter_mut().zip(s) {
                *di += (a - b) * si;
            }
        }
        for di in d.iter_mut() {
            *di = -*di;
        }
        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            history.clear();
            for (di, gi) in d.iter_mut().zip(&g) {
                *di = -gi;
            }
            slope = -dot(&g, &g);
        }

        let found = line_search(
            &mut f,
            x,
            &d,
            value,
            slope,
            &mut trial,
            &mut g_trial,
            &mut evaluations,
        );
        let Some(step) = found else {
            if retried || history.is_empty() {
                return LbfgsReport {
                    iterations,
                    evaluations,
                    value,
                    grad_inf,
                    exit: LbfgsExit::LineSearchFailed,
                };
            }
            history.clear();
            retried = true;
            continue;
        };
        retried = false;

        // trial/g_trial hold the accepted point
        let s: Vec<f64> = trial.iter().zip(x.iter()).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_trial.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() && sy > 0.0 {
            if history.len() == options.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        x.copy_from_slice(&trial);
        g.copy_from_slice(&g_trial);
        value = step;
        iterations += 1;
    }
}

/// Strong-Wolfe search along `d`. On success `trial`/`g_trial` hold the
/// accepted point and the new value is returned.
#[allow(clippy::too_many_arguments)]
fn line_search<F>(
    f: &mut F,
    x: &[f64],
    d: &[f64],
    value0: f64,
    slope0: f64,
    trial: &mut [f64],
    g_trial: &mut [f64],
    evaluations: &mut usize,
) -> Option<f64>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let mut eval = |alpha: f64, trial: &mut [f64], g_trial: &mut [f64]| -> Point {
        for ((t, xi), di) in trial.iter_mut().zip(x).zip(d) {
            *t = xi + alpha * di;
        }
        let value = f(trial, g_trial);
        *evaluations += 1;
        Point {
            alpha,
            value,
            slope: dot(g_trial, d),
        }
    };
    let armijo = |p: &Point| p.value <= value0 + C1 * p.alpha * slope0;
    let curvature = |p: &Point| p.slope.abs() <= -C2 * slope0;

    let mut prev = Point {
        alpha: 0.0,
        value: value0,
        slope: slope0,
    };
    let mut alpha = 1.0;
    let mut used = 0;
    let (mut lo, mut hi);
    loop {
        let p = eval(alpha, trial, g_trial);
        used += 1;
        if !p.value.is_finite() {
            alpha *= 0.1;
            if used >= MAX_LINE_EVALS {
                return None;
            }
            continue;
        }
        if !armijo(&p) || (used > 1 && p.value >= prev.value) {
            lo = prev;
            hi = p;
            break;
        }
        if curvature(&p) {
            return Some(p.value);
        }
        if p.slope >= 0.0 {
            lo = p;
            hi = prev;
            break;
        }
        if used >= MAX_LINE_EVALS {
            return None;
        }
        alpha = 2.0 * p.alpha;
        prev = p;
    }

    // zoom
    while used < MAX_LINE_EVALS {
        let a = interpolate(&lo, &hi);
        let p = eval(a, trial, g_trial);
        used += 1;
        if !armijo(&p) || p.value >= lo.value {
            hi = p;
        } else {
            if curvature(&p) {
                return Some(p.value);
            }
            if p.slope * (hi.alpha - lo.alpha) >= 0.0 {
                hi = lo;
            }
            lo = p;
        }
        if (hi.alpha - lo.alpha).abs() < 1e-16 * lo.alpha.abs().max(1e-16) {
            break;
        }
    }
    // accept the best sufficient-decrease point if the curvature test never passed
    if lo.alpha > 0.0 && lo.value < value0 {
        let p = eval(lo.alpha, trial, g_trial);
        return Some(p.value);
    }
    None
}

/// Safeguarded cubic interpolation inside `[lo, hi]`.
fn interpolate(lo: &Point, hi: &Point) -> f64 {
    let (a, b) = (lo.alpha, hi.alpha);
    let d1 = lo.slope + hi.slope - 3.0 * (lo.value - hi.value) / (a - b);
    let disc = d1 * d1 - lo.slope * hi.slope;
    let (left, right) = if a < b { (a, b) } else { (b, a) };
    let width = right - left;
    if disc >= 0.0 {
        let d2 = (b - a).signum() * disc.sqrt();
        let t = b - (b - a) * (hi.slope + d2 - d1) / (hi.slope - lo.slope + 2.0 * d2);
        if t.is_finite() && t > left + 0.1 * width && t < right - 0.1 * width {
            return t;
        }
    }
    0.5 * (a + b)
}
