//! Limited-memory BFGS with a strong-Wolfe line search.

use std::collections::VecDeque;

use crate::linalg::Vector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsConfig {
    pub memory: usize,
    pub max_iters: usize,
    /// Stop when ‖∇f‖∞ falls below this.
    pub grad_tol: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        Self {
            memory: 10,
            max_iters: 1_000_000,
            grad_tol: 1e-9,
            c1: 1e-4,
            c2: 0.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsResult {
    pub x: Vector,
    pub f: f64,
    pub grad: Vector,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes `fg`, which returns the objective and its gradient.
///
/// Non-finite objective values are treated as +∞ by the line search.
pub fn minimize(fg: &dyn Fn(&Vector) -> (f64, Vector), x0: &Vector, cfg: &LbfgsConfig) -> LbfgsResult {
    let mut x = x0.clone();
    let (mut f, mut g) = fg(&x);
    let mut history: VecDeque<(Vector, Vector, f64)> = VecDeque::with_capacity(cfg.memory);
    let mut failures = 0;
    let mut iterations = 0;

    while iterations < cfg.max_iters {
        if !f.is_finite() || !g.iter().all(|v| v.is_finite()) {
            break;
        }
        if g.amax() <= cfg.grad_tol {
            return LbfgsResult {
                x,
                f,
                grad: g,
                iterations,
                converged: true,
            };
        }
        iterations += 1;

        let mut d = -two_loop(&g, &history);
        let mut slope = g.dot(&d);
        if !(slope < 0.0) {
            history.clear();
            d = -g.clone();
            slope = g.dot(&d);
        }
        let alpha0 = if history.is_empty() {
            (1.0 / g.norm()).min(1.0)
        } else {
            1.0
        };

        match line_search(fg, &x, f, slope, &d, alpha0, cfg) {
            Some((alpha, f_new, g_new)) => {
                let s = &d * alpha;
                let y = &g_new - &g;
                let sy = s.dot(&y);
                if sy > 1e-12 * s.norm() * y.norm() {
                    if history.len() == cfg.memory {
                        history.pop_front();
                    }
                    history.push_back((s.clone(), y, 1.0 / sy));
                }
                let x_new = &x + s;
                let stalled = (f - f_new).abs() <= f64::EPSILON * f.abs().max(1.0)
                    && (&x_new - &x).amax() <= f64::EPSILON * x.amax().max(1.0);
                x = x_new;
                f = f_new;
                g = g_new;
                failures = 0;
                if stalled {
                    break;
                }
            }
            None => {
                failures += 1;
                if failures >= 2 {
                    break;
                }
                history.clear();
            }
        }
    }
    let converged = g.amax() <= cfg.grad_tol;
    LbfgsResult {
        x,
        f,
        grad: g,
        iterations,
        converged,
    }
}

fn two_loop(g: &Vector, history: &VecDeque<(Vector, Vector, f64)>) -> Vector {
    let mut q = g.clone();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * s.dot(&q);
        q.axpy(-a, y, 1.0);
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        q *= s.dot(y) / y.dot(y);
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
        let b = rho * y.dot(&q);
        q.axpy(a - b, s, 1.0);
    }
    q
}

/// Strong-Wolfe bracketing and zoom with safeguarded cubic interpolation.
fn line_search(
    fg: &dyn Fn(&Vector) -> (f64, Vector),
    x: &Vector,
    f0: f64,
    slope0: f64,
    d: &Vector,
    alpha0: f64,
    cfg: &LbfgsConfig,
) -> Option<(f64, f64, Vector)> {
    let eval = |alpha: f64| {
        let (f, g) = fg(&(x + d * alpha));
        let f = if f.is_finite() && g.iter().all(|v| v.is_finite()) {
            f
        } else {
            f64::INFINITY
        };
        let slope = g.dot(d);
        (f, slope, g)
    };

    let mut a_prev = 0.0;
    let mut f_prev = f0;
    let mut s_prev = slope0;
    let mut alpha = alpha0;
    for i in 0..40 {
        let (f, s, g) = eval(alpha);
        if !f.is_finite() {
            // shrink back into the finite region
            return zoom(&eval, a_prev, f_prev, s_prev, alpha, f, s, f0, slope0, cfg);
        }
        if f > f0 + cfg.c1 * alpha * slope0 || (i > 0 && f >= f_prev) {
            return zoom(&eval, a_prev, f_prev, s_prev, alpha, f, s, f0, slope0, cfg);
        }
        if s.abs() <= -cfg.c2 * slope0 {
            return Some((alpha, f, g));
        }
        if s >= 0.0 {
            return zoom(&eval, alpha, f, s, a_prev, f_prev, s_prev, f0, slope0, cfg);
        }
        a_prev = alpha;
        f_prev = f;
        s_prev = s;
        alpha *= 2.0;
    }
    None
}

#[allow(clippy::too_many_arguments)]
fn zoom(
    eval: &dyn Fn(f64) -> (f64, f64, Vector),
    mut a_lo: f64,
    mut f_lo: f64,
    mut s_lo: f64,
    mut a_hi: f64,
    mut f_hi: f64,
    mut s_hi: f64,
    f0: f64,
    slope0: f64,
    cfg: &LbfgsConfig,
) -> Option<(f64, f64, Vector)> {
    for _ in 0..60 {
        let alpha = interpolate(a_lo, f_lo, s_lo, a_hi, f_hi, s_hi);
        let (f, s, g) = eval(alpha);
        if !f.is_finite() || f > f0 + cfg.c1 * alpha * slope0 || f >= f_lo {
            a_hi = alpha;
            f_hi = f;
            s_hi = s;
        } else {
            if s.abs() <= -cfg.c2 * slope0 {
                return Some((alpha, f, g));
            }
            if s * (a_hi - a_lo) >= 0.0 {
                a_hi = a_lo;
                f_hi = f_lo;
                s_hi = s_lo;
            }
            a_lo = alpha;
            f_lo = f;
            s_lo = s;
        }
        if (a_hi - a_lo).abs() <= f64::EPSILON * a_lo.abs().max(1e-300) {
            break;
        }
    }
    // accept a sufficient-decrease point even if curvature was not met
    if a_lo > 0.0 && f_lo < f0 {
        let (f, _, g) = eval(a_lo);
        return Some((a_lo, f, g));
    }
    None
}

/// Cubic minimizer through both endpoints, falling back to bisection.
fn interpolate(a: f64, fa: f64, sa: f64, b: f64, fb: f64, sb: f64) -> f64 {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let mid = 0.5 * (a + b);
    if !fb.is_finite() || !sb.is_finite() {
        return mid;
    }
    let d1 = sa + sb - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - sa * sb;
    if disc < 0.0 {
        return mid;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let t = b - (b - a) * (sb + d2 - d1) / (sb - sa + 2.0 * d2);
    let margin = 0.1 * (hi - lo);
    if t.is_finite() && t > lo + margin && t < hi - margin {
        t
    } else {
        mid
    }
}
