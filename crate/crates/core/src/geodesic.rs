//! Exponential map by Dormand–Prince 5(4) integration of the geodesic
//! equation, and logarithmic map by single shooting.

use std::cell::Cell;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Metric;
use crate::linalg::{Matrix, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    /// Cap on attempted (accepted plus rejected) steps.
    pub max_steps: usize,
    pub t_end: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-3,
            atol: 1e-6,
            max_steps: 4096,
            t_end: 1.0,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0) || !(self.atol > 0.0) {
            return Err(Error::InvalidConfig("integrator.rtol and integrator.atol must be > 0".into()));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidConfig("integrator.max_steps must be >= 1".into()));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::InvalidConfig("integrator.t_end must be a positive number".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeodesicStatus {
    Ok,
    MaxStepsExceeded,
    MetricFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicResult {
    pub endpoint: Vector,
    pub end_velocity: Vector,
    /// Right-hand-side evaluations, counted as 6 per attempted step.
    pub nfev: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub status: GeodesicStatus,
}

impl GeodesicResult {
    pub fn is_ok(&self) -> bool {
        self.status == GeodesicStatus::Ok
    }
}

// The system is autonomous, so the stage times c_i are not needed.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// fifth-order minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const PI_ALPHA: f64 = 0.7 / 5.0;
const PI_BETA: f64 = 0.4 / 5.0;

/// Right-hand side of the first-order system y = (θ, v), y' = (v, a(θ, v)).
fn rhs(metric: &dyn Metric, y: &Vector, d: usize) -> Option<Vector> {
    let theta = y.rows(0, d).into_owned();
    let v = y.rows(d, d).into_owned();
    let a = metric.accel(&theta, &v).ok()?;
    if !a.iter().all(|x| x.is_finite()) {
        return None;
    }
    let mut out = Vector::zeros(2 * d);
    out.rows_mut(0, d).copy_from(&v);
    out.rows_mut(d, d).copy_from(&a);
    Some(out)
}

fn error_norm(err: &Vector, y: &Vector, y_new: &Vector, cfg: &IntegratorConfig) -> f64 {
    let n = err.len() as f64;
    let s: f64 = err
        .iter()
        .zip(y.iter().zip(y_new.iter()))
        .map(|(e, (a, b))| {
            let sc = cfg.atol.max(cfg.rtol * a.abs().max(b.abs()));
            (e / sc).powi(2)
        })
        .sum();
    (s / n).sqrt()
}

fn rms_scaled(x: &Vector, y: &Vector, cfg: &IntegratorConfig) -> f64 {
    let n = x.len() as f64;
    let s: f64 = x
        .iter()
        .zip(y.iter())
        .map(|(xi, yi)| (xi / cfg.atol.max(cfg.rtol * yi.abs())).powi(2))
        .sum();
    (s / n).sqrt()
}

/// Starting step from the usual two-probe heuristic for a 5th-order method.
fn initial_step(metric: &dyn Metric, y: &Vector, f0: &Vector, d: usize, cfg: &IntegratorConfig) -> f64 {
    let d0 = rms_scaled(y, y, cfg);
    let d1 = rms_scaled(f0, y, cfg);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(cfg.t_end);
    let y1 = y + f0 * h0;
    let d2 = match rhs(metric, &y1, d) {
        Some(f1) => rms_scaled(&(f1 - f0), y, cfg) / h0,
        None => return h0,
    };
    let dm = d1.max(d2);
    let h1 = if dm <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / dm).powf(1.0 / 5.0)
    };
    (100.0 * h0).min(h1).min(cfg.t_end)
}

/// Geodesic endpoint at `cfg.t_end` from (θ0, v0).
pub fn exp_map(metric: &dyn Metric, theta0: &Vector, v0: &Vector, cfg: &IntegratorConfig) -> GeodesicResult {
    exp_map_observed(metric, theta0, v0, cfg, &mut |_, _, _| {})
}

/// [`exp_map`] calling `observer(t, θ, v)` at the start and after each accepted step.
pub fn exp_map_observed(
    metric: &dyn Metric,
    theta0: &Vector,
    v0: &Vector,
    cfg: &IntegratorConfig,
    observer: &mut dyn FnMut(f64, &Vector, &Vector),
) -> GeodesicResult {
    let d = theta0.len();
    observer(0.0, theta0, v0);
    if metric.is_flat() {
        let endpoint = theta0 + v0 * cfg.t_end;
        observer(cfg.t_end, &endpoint, v0);
        return GeodesicResult {
            endpoint,
            end_velocity: v0.clone(),
            nfev: 6,
            accepted: 1,
            rejected: 0,
            status: GeodesicStatus::Ok,
        };
    }

    let mut y = Vector::zeros(2 * d);
    y.rows_mut(0, d).copy_from(theta0);
    y.rows_mut(d, d).copy_from(v0);
    let split = |y: &Vector| (y.rows(0, d).into_owned(), y.rows(d, d).into_owned());
    let failed = |y: &Vector, attempts: usize, accepted: usize, status| {
        let (endpoint, end_velocity) = split(y);
        GeodesicResult {
            endpoint,
            end_velocity,
            nfev: 6 * attempts,
            accepted,
            rejected: attempts - accepted,
            status,
        }
    };

    let Some(mut k1) = rhs(metric, &y, d) else {
        return failed(&y, 0, 0, GeodesicStatus::MetricFailure);
    };
    let mut h = initial_step(metric, &y, &k1, d, cfg);
    let mut t = 0.0;
    let mut err_old: f64 = 1e-4;
    let mut attempts = 0;
    let mut accepted = 0;
    let mut last_rejected = false;

    while t < cfg.t_end {
        if attempts >= cfg.max_steps {
            return failed(&y, attempts, accepted, GeodesicStatus::MaxStepsExceeded);
        }
        let remaining = cfg.t_end - t;
        let last = h >= remaining * (1.0 - 1e-12);
        if last {
            h = remaining;
        }
        if !(h > 16.0 * f64::EPSILON * t.abs().max(cfg.t_end)) {
            return failed(&y, attempts, accepted, GeodesicStatus::MetricFailure);
        }
        attempts += 1;

        let stages = (|| {
            let k2 = rhs(metric, &(&y + &k1 * (h * A21)), d)?;
            let k3 = rhs(metric, &(&y + (&k1 * A31 + &k2 * A32) * h), d)?;
            let k4 = rhs(metric, &(&y + (&k1 * A41 + &k2 * A42 + &k3 * A43) * h), d)?;
            let k5 = rhs(
                metric,
                &(&y + (&k1 * A51 + &k2 * A52 + &k3 * A53 + &k4 * A54) * h),
                d,
            )?;
            let k6 = rhs(
                metric,
                &(&y + (&k1 * A61 + &k2 * A62 + &k3 * A63 + &k4 * A64 + &k5 * A65) * h),
                d,
            )?;
            let y_new = &y + (&k1 * A71 + &k3 * A73 + &k4 * A74 + &k5 * A75 + &k6 * A76) * h;
            let k7 = rhs(metric, &y_new, d)?;
            let err = (&k1 * E1 + &k3 * E3 + &k4 * E4 + &k5 * E5 + &k6 * E6 + &k7 * E7) * h;
            Some((y_new, k7, err))
        })();
        let Some((y_new, k7, err_vec)) = stages else {
            return failed(&y, attempts, accepted, GeodesicStatus::MetricFailure);
        };

        let err = error_norm(&err_vec, &y, &y_new, cfg);
        if !err.is_finite() {
            return failed(&y, attempts, accepted, GeodesicStatus::MetricFailure);
        }
        if err <= 1.0 {
            t = if last { cfg.t_end } else { t + h };
            y = y_new;
            k1 = k7;
            accepted += 1;
            {
                let (th, v) = split(&y);
                observer(t, &th, &v);
            }
            let mut fac = if err == 0.0 {
                FAC_MAX
            } else {
                SAFETY * err.powf(-PI_ALPHA) * err_old.powf(PI_BETA)
            };
            fac = fac.clamp(FAC_MIN, FAC_MAX);
            if last_rejected {
                fac = fac.min(1.0);
            }
            h *= fac;
            err_old = err.max(1e-4);
            last_rejected = false;
        } else {
            h *= FAC_MIN.max(SAFETY * err.powf(-0.2));
            last_rejected = true;
        }
    }

    let (endpoint, end_velocity) = split(&y);
    GeodesicResult {
        endpoint,
        end_velocity,
        nfev: 6 * attempts,
        accepted,
        rejected: attempts - accepted,
        status: GeodesicStatus::Ok,
    }
}

/// ‖v(t)‖²_G at the start and after each accepted step.
pub fn norm_trace(
    metric: &dyn Metric,
    theta0: &Vector,
    v0: &Vector,
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>> {
    let mut points = Vec::new();
    let res = exp_map_observed(metric, theta0, v0, cfg, &mut |_, th, v| {
        points.push((th.clone(), v.clone()));
    });
    if !res.is_ok() {
        return Err(Error::Geodesic(res.status));
    }
    points.iter().map(|(th, v)| metric.norm_sq(th, v)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShootingConfig {
    pub max_iters: usize,
    pub initial_damping: f64,
    /// Cap on exponential-map evaluations per log map, continuation included.
    pub max_evals: Option<usize>,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        Self {
            max_iters: 50,
            initial_damping: 1e-3,
            max_evals: None,
        }
    }
}

struct Budget {
    used: Cell<usize>,
    limit: usize,
}

impl Budget {
    fn take(&self) -> bool {
        let used = self.used.get();
        if used >= self.limit {
            return false;
        }
        self.used.set(used + 1);
        true
    }
}

/// Initial velocity whose geodesic from θ0 reaches `target` at `cfg.t_end`.
///
/// Levenberg–Marquardt on the shooting residual exp(θ0, v) − target. The
/// Jacobian starts from forward differences and is then kept current with
/// Broyden updates, refreshed by differences whenever a step fails.
pub fn log_map(
    metric: &dyn Metric,
    theta0: &Vector,
    target: &Vector,
    cfg: &IntegratorConfig,
    shoot: &ShootingConfig,
) -> Result<Vector> {
    let budget = Budget {
        used: Cell::new(0),
        limit: shoot.max_evals.unwrap_or(usize::MAX),
    };
    let u = target - theta0;
    let direct = shoot_from(metric, theta0, target, u.clone() / cfg.t_end, cfg, shoot, &budget);
    match direct {
        Err(Error::LogMapFailure { .. }) if budget.used.get() < budget.limit => {}
        other => return other,
    }
    // Continuation along the straight segment: each stage starts from the
    // previous solution, rescaled, and stays on the branch through θ0.
    let mut v = &u / (CONTINUATION_STAGES as f64 * cfg.t_end);
    for k in 1..=CONTINUATION_STAGES {
        let frac = k as f64 / CONTINUATION_STAGES as f64;
        let stage_target = theta0 + &u * frac;
        v = shoot_from(metric, theta0, &stage_target, v, cfg, shoot, &budget)?;
        if k < CONTINUATION_STAGES {
            v *= (k + 1) as f64 / k as f64;
        }
    }
    Ok(v)
}

/// Stages used when direct shooting fails.
const CONTINUATION_STAGES: usize = 8;

fn shoot_from(
    metric: &dyn Metric,
    theta0: &Vector,
    target: &Vector,
    v_init: Vector,
    cfg: &IntegratorConfig,
    shoot: &ShootingConfig,
    budget: &Budget,
) -> Result<Vector> {
    let d = theta0.len();
    let tol = 10.0 * cfg.atol;
    let residual = |v: &Vector| -> Result<Vector> {
        if !budget.take() {
            return Err(Error::LogMapFailure {
                iterations: 0,
                residual: f64::NAN,
            });
        }
        let res = exp_map(metric, theta0, v, cfg);
        if !res.is_ok() {
            return Err(Error::Geodesic(res.status));
        }
        Ok(res.endpoint - target)
    };

    let fd_jacobian = |v: &Vector, r: &Vector| -> Result<Matrix> {
        let step = f64::EPSILON.sqrt() * (1.0 + v.norm());
        let mut jac = Matrix::zeros(d, d);
        for j in 0..d {
            let mut vp = v.clone();
            vp[j] += step;
            let rp = residual(&vp)?;
            jac.set_column(j, &((rp - r) / (vp[j] - v[j])));
        }
        Ok(jac)
    };

    let mut v = v_init;
    let mut r = residual(&v)?;
    let mut lambda = shoot.initial_damping;
    let mut jac = fd_jacobian(&v, &r)?;
    // true while `jac` carries Broyden updates rather than fresh differences
    let mut updated = false;
    for iter in 0..shoot.max_iters {
        if r.amax() <= tol {
            return Ok(v);
        }
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * &r;
        let diag_scale = (0..d).map(|i| jtj[(i, i)]).fold(0.0, f64::max).max(1e-12);

        let mut accepted = None;
        for _ in 0..16 {
            let mut a = jtj.clone();
            for i in 0..d {
                a[(i, i)] += lambda * diag_scale;
            }
            let Some(delta) = a.cholesky().map(|c| -c.solve(&jtr)) else {
                lambda *= 4.0;
                continue;
            };
            let v_new = &v + &delta;
            match residual(&v_new) {
                Err(Error::LogMapFailure { .. }) => {
                    return Err(Error::LogMapFailure {
                        iterations: iter + 1,
                        residual: r.amax(),
                    })
                }
                Ok(r_new) if r_new.norm() < r.norm() => {
                    accepted = Some((delta, v_new, r_new));
                    lambda = (lambda / 3.0).max(1e-12);
                    break;
                }
                _ => lambda *= 4.0,
            }
        }
        match accepted {
            Some((delta, v_new, r_new)) => {
                // Broyden rank-one update: J += (Δr − JΔv) Δvᵀ / ‖Δv‖²
                let dd = delta.norm_squared();
                if dd > 0.0 {
                    let corr = (&r_new - &r) - &jac * &delta;
                    jac += corr * delta.transpose() / dd;
                    updated = true;
                }
                v = v_new;
                r = r_new;
            }
            None if updated => {
                jac = fd_jacobian(&v, &r).map_err(|e| match e {
                    Error::LogMapFailure { .. } => Error::LogMapFailure {
                        iterations: iter + 1,
                        residual: r.amax(),
                    },
                    e => e,
                })?;
                updated = false;
                lambda = shoot.initial_damping;
            }
            None => {
                return Err(Error::LogMapFailure {
                    iterations: iter + 1,
                    residual: r.amax(),
                })
            }
        }
    }
    if r.amax() <= tol {
        Ok(v)
    } else {
        Err(Error::LogMapFailure {
            iterations: shoot.max_iters,
            residual: r.amax(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ConstantMetric, Euclidean, GaussianMongeMetric, MongeMetric};
    use crate::targets::GaussianTarget;

    fn vec2(a: f64, b: f64) -> Vector {
        Vector::from_vec(vec![a, b])
    }

    #[test]
    fn euclidean_is_a_unit_step() {
        let m = Euclidean { dim: 2 };
        let r = exp_map(&m, &vec2(0.5, -1.0), &vec2(1.0, 2.0), &IntegratorConfig::default());
        assert_eq!(r.endpoint, vec2(1.5, 1.0));
        assert_eq!(r.nfev, 6);
        assert!(r.is_ok());
    }

    #[test]
    fn constant_metric_moves_straight() {
        let g = Matrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 2.0]);
        let m = ConstantMetric::new(g).unwrap();
        let r = exp_map(&m, &vec2(0.0, 0.0), &vec2(-1.0, 0.5), &IntegratorConfig::default());
        assert_eq!(r.endpoint, vec2(-1.0, 0.5));
    }

    #[test]
    fn max_steps_is_reported() {
        let target = GaussianTarget::isotropic(2);
        let m = MongeMetric::new(&target);
        let cfg = IntegratorConfig {
            max_steps: 1,
            rtol: 1e-10,
            atol: 1e-12,
            ..Default::default()
        };
        let r = exp_map(&m, &vec2(0.0, 0.0), &vec2(3.0, 0.0), &cfg);
        assert_eq!(r.status, GeodesicStatus::MaxStepsExceeded);
        assert_eq!(r.nfev, 6);
    }

    #[test]
    fn euclidean_log_map_is_difference() {
        let m = Euclidean { dim: 2 };
        let v = log_map(
            &m,
            &vec2(1.0, 1.0),
            &vec2(-2.0, 4.0),
            &IntegratorConfig::default(),
            &ShootingConfig::default(),
        )
        .unwrap();
        assert_eq!(v, vec2(-3.0, 3.0));
    }

    #[test]
    fn gaussian_monge_log_map_needs_more_speed() {
        let m = GaussianMongeMetric::new(Vector::zeros(2), Matrix::identity(2, 2)).unwrap();
        let v = log_map(
            &m,
            &Vector::zeros(2),
            &vec2(2.0, 0.0),
            &IntegratorConfig::default(),
            &ShootingConfig::default(),
        )
        .unwrap();
        assert!(v.norm() > 2.0, "{v}");
    }
}
