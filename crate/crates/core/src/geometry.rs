//! Metric fields and geodesic accelerations aᵏ = −Γᵏᵢⱼ vⁱ vʲ.

use crate::error::{Error, Result};
use crate::linalg::{cholesky_with_jitter, log_det_from_chol, Chol, Matrix, Vector};
use crate::targets::{empirical_fisher, Target};

pub use crate::targets::logistic_accel;
pub use crate::targets::mlp_accel;

/// Relative step for finite differences of the metric tensor.
pub fn default_step() -> f64 {
    f64::EPSILON.cbrt()
}

/// Above this dimension `numeric_accel` avoids the full D×D×D derivative tensor.
pub const DIRECTIONAL_ACCEL_DIM: usize = 64;

/// A position-dependent SPD tensor field.
pub trait Metric: Send + Sync {
    fn dim(&self) -> usize;

    fn tensor(&self, theta: &Vector) -> Result<Matrix>;

    /// True when geodesics are straight lines (zero acceleration everywhere).
    fn is_flat(&self) -> bool {
        false
    }

    fn chol(&self, theta: &Vector) -> Result<Chol> {
        let g = self.tensor(theta)?;
        cholesky_with_jitter(&g).ok_or_else(|| non_spd(theta))
    }

    /// Solves G(θ) x = w.
    fn inverse_apply(&self, theta: &Vector, w: &Vector) -> Result<Vector> {
        Ok(self.chol(theta)?.solve(w))
    }

    fn log_det(&self, theta: &Vector) -> Result<f64> {
        Ok(log_det_from_chol(&self.chol(theta)?))
    }

    /// −Γᵏᵢⱼ vⁱ vʲ.
    fn accel(&self, theta: &Vector, v: &Vector) -> Result<Vector> {
        numeric_accel(&|t: &Vector| self.tensor(t), theta, v, default_step())
    }

    fn log_det_grad(&self, theta: &Vector) -> Result<Vector> {
        log_det_grad(&|t: &Vector| self.log_det(t), theta, default_step())
    }

    /// g(v, v) at θ.
    fn norm_sq(&self, theta: &Vector, v: &Vector) -> Result<f64> {
        Ok(v.dot(&(self.tensor(theta)? * v)))
    }
}

fn non_spd(theta: &Vector) -> Error {
    Error::NonSpdMetric {
        theta: theta.iter().copied().collect(),
    }
}

/// Geodesic acceleration from central differences of the tensor.
///
/// With Γₗᵢⱼ = ½(∂ᵢG_{jl} + ∂ⱼG_{il} − ∂ₗG_{ij}) the contraction is
/// p1 + p2 − p3 where p1 = p2 = (Σᵢ vⁱ ∂ᵢG) v and p3ₗ = vᵀ ∂ₗG v.
pub fn numeric_accel(
    tensor_fn: &dyn Fn(&Vector) -> Result<Matrix>,
    theta: &Vector,
    v: &Vector,
    h: f64,
) -> Result<Vector> {
    let d = theta.len();
    let g = tensor_fn(theta)?;
    let chol = cholesky_with_jitter(&g).ok_or_else(|| non_spd(theta))?;
    let mut p1 = Vector::zeros(d);
    let mut p3 = Vector::zeros(d);
    if d <= DIRECTIONAL_ACCEL_DIM {
        for i in 0..d {
            let dg = partial(tensor_fn, theta, i, h)?;
            let dgv = &dg * v;
            p1.axpy(v[i], &dgv, 1.0);
            p3[i] = v.dot(&dgv);
        }
    } else {
        let vn = v.norm();
        if vn > 0.0 {
            let u = v / vn;
            let step = h * (1.0 + theta.amax());
            let gp = tensor_fn(&(theta + &u * step))?;
            let gm = tensor_fn(&(theta - &u * step))?;
            p1 = (gp - gm) * v * (vn / (2.0 * step));
        }
        for i in 0..d {
            let step = h * (1.0 + theta[i].abs());
            let mut tp = theta.clone();
            tp[i] += step;
            let mut tm = theta.clone();
            tm[i] -= step;
            let qp = v.dot(&(tensor_fn(&tp)? * v));
            let qm = v.dot(&(tensor_fn(&tm)? * v));
            p3[i] = (qp - qm) / (tp[i] - tm[i]);
        }
    }
    Ok(-chol.solve(&(p1 - p3 * 0.5)))
}

fn partial(
    tensor_fn: &dyn Fn(&Vector) -> Result<Matrix>,
    theta: &Vector,
    i: usize,
    h: f64,
) -> Result<Matrix> {
    let step = h * (1.0 + theta[i].abs());
    let mut tp = theta.clone();
    tp[i] += step;
    let mut tm = theta.clone();
    tm[i] -= step;
    let denom = tp[i] - tm[i];
    Ok((tensor_fn(&tp)? - tensor_fn(&tm)?) / denom)
}

/// Central-difference gradient of a log-determinant function.
pub fn log_det_grad(
    log_det_fn: &dyn Fn(&Vector) -> Result<f64>,
    theta: &Vector,
    h: f64,
) -> Result<Vector> {
    let mut out = Vector::zeros(theta.len());
    for i in 0..theta.len() {
        let step = h * (1.0 + theta[i].abs());
        let mut tp = theta.clone();
        tp[i] += step;
        let mut tm = theta.clone();
        tm[i] -= step;
        out[i] = (log_det_fn(&tp)? - log_det_fn(&tm)?) / (tp[i] - tm[i]);
    }
    Ok(out)
}

/// Closed-form acceleration for G = I + ∇ℓ∇ℓᵀ.
pub fn monge_accel(grad: &Vector, hvp_v: &Vector, v: &Vector) -> Vector {
    grad * (-v.dot(hvp_v) / (1.0 + grad.norm_squared()))
}

/// Sherman–Morrison solve of (I + ggᵀ) x = w.
pub fn monge_inverse_apply(grad: &Vector, w: &Vector) -> Vector {
    w - grad * (grad.dot(w) / (1.0 + grad.norm_squared()))
}

fn monge_tensor(g: &Vector) -> Matrix {
    let d = g.len();
    Matrix::identity(d, d) + g * g.transpose()
}

#[derive(Debug, Clone, Copy)]
pub struct Euclidean {
    pub dim: usize,
}

impl Metric for Euclidean {
    fn dim(&self) -> usize {
        self.dim
    }

    fn tensor(&self, _theta: &Vector) -> Result<Matrix> {
        Ok(Matrix::identity(self.dim, self.dim))
    }

    fn is_flat(&self) -> bool {
        true
    }

    fn inverse_apply(&self, _theta: &Vector, w: &Vector) -> Result<Vector> {
        Ok(w.clone())
    }

    fn log_det(&self, _theta: &Vector) -> Result<f64> {
        Ok(0.0)
    }

    fn accel(&self, _theta: &Vector, v: &Vector) -> Result<Vector> {
        Ok(Vector::zeros(v.len()))
    }

    fn log_det_grad(&self, theta: &Vector) -> Result<Vector> {
        Ok(Vector::zeros(theta.len()))
    }

    fn norm_sq(&self, _theta: &Vector, v: &Vector) -> Result<f64> {
        Ok(v.norm_squared())
    }
}

/// A position-independent SPD tensor.
#[derive(Debug, Clone)]
pub struct ConstantMetric {
    g: Matrix,
    chol: Chol,
}

impl ConstantMetric {
    pub fn new(g: Matrix) -> Result<Self> {
        let chol = crate::targets::require_spd(&g, "constant metric")?;
        Ok(Self { g, chol })
    }
}

impl Metric for ConstantMetric {
    fn dim(&self) -> usize {
        self.g.nrows()
    }

    fn tensor(&self, _theta: &Vector) -> Result<Matrix> {
        Ok(self.g.clone())
    }

    fn is_flat(&self) -> bool {
        true
    }

    fn chol(&self, _theta: &Vector) -> Result<Chol> {
        Ok(self.chol.clone())
    }

    fn accel(&self, _theta: &Vector, v: &Vector) -> Result<Vector> {
        Ok(Vector::zeros(v.len()))
    }

    fn log_det_grad(&self, theta: &Vector) -> Result<Vector> {
        Ok(Vector::zeros(theta.len()))
    }
}

/// Any tensor-valued closure, with numeric Christoffel contraction.
pub struct TensorField<F> {
    dim: usize,
    f: F,
}

impl<F> TensorField<F>
where
    F: Fn(&Vector) -> Matrix + Send + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> Metric for TensorField<F>
where
    F: Fn(&Vector) -> Matrix + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn tensor(&self, theta: &Vector) -> Result<Matrix> {
        Ok((self.f)(theta))
    }
}

/// G(θ) = I + ∇ℓ(θ)∇ℓ(θ)ᵀ for the target log-density ℓ.
#[derive(Clone, Copy)]
pub struct MongeMetric<'a> {
    target: &'a dyn Target,
}

impl<'a> MongeMetric<'a> {
    pub fn new(target: &'a dyn Target) -> Self {
        Self { target }
    }
}

impl Metric for MongeMetric<'_> {
    fn dim(&self) -> usize {
        self.target.dim()
    }

    fn tensor(&self, theta: &Vector) -> Result<Matrix> {
        Ok(monge_tensor(&self.target.grad(theta)))
    }

    fn inverse_apply(&self, theta: &Vector, w: &Vector) -> Result<Vector> {
        Ok(monge_inverse_apply(&self.target.grad(theta), w))
    }

    fn log_det(&self, theta: &Vector) -> Result<f64> {
        Ok(self.target.grad(theta).norm_squared().ln_1p())
    }

    fn accel(&self, theta: &Vector, v: &Vector) -> Result<Vector> {
        let g = self.target.grad(theta);
        let hv = self.target.hvp(theta, v);
        Ok(monge_accel(&g, &hv, v))
    }

    fn log_det_grad(&self, theta: &Vector) -> Result<Vector> {
        let g = self.target.grad(theta);
        let hg = self.target.hvp(theta, &g);
        Ok(hg * (2.0 / (1.0 + g.norm_squared())))
    }

    fn norm_sq(&self, theta: &Vector, v: &Vector) -> Result<f64> {
        let g = self.target.grad(theta);
        Ok(v.norm_squared() + g.dot(v).powi(2))
    }
}

/// Monge metric of the Gaussian N(θ̂, Σ): g(θ) = −Σ⁻¹(θ − θ̂).
#[derive(Debug, Clone)]
pub struct GaussianMongeMetric {
    center: Vector,
    precision: Matrix,
}

impl GaussianMongeMetric {
    pub fn new(center: Vector, precision: Matrix) -> Result<Self> {
        crate::targets::check_dim(center.len(), precision.nrows())?;
        crate::targets::require_spd(&precision, "Gaussian-Monge precision")?;
        Ok(Self { center, precision })
    }

    fn grad(&self, theta: &Vector) -> Vector {
        -(&self.precision * (theta - &self.center))
    }
}

impl Metric for GaussianMongeMetric {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn tensor(&self, theta: &Vector) -> Result<Matrix> {
        Ok(monge_tensor(&self.grad(theta)))
    }

    fn inverse_apply(&self, theta: &Vector, w: &Vector) -> Result<Vector> {
        Ok(monge_inverse_apply(&self.grad(theta), w))
    }

    fn log_det(&self, theta: &Vector) -> Result<f64> {
        Ok(self.grad(theta).norm_squared().ln_1p())
    }

    fn accel(&self, theta: &Vector, v: &Vector) -> Result<Vector> {
        let hv = -(&self.precision * v);
        Ok(monge_accel(&self.grad(theta), &hv, v))
    }

    fn log_det_grad(&self, theta: &Vector) -> Result<Vector> {
        let g = self.grad(theta);
        let hg = -(&self.precision * &g);
        Ok(hg * (2.0 / (1.0 + g.norm_squared())))
    }

    fn norm_sq(&self, theta: &Vector, v: &Vector) -> Result<f64> {
        Ok(v.norm_squared() + self.grad(theta).dot(v).powi(2))
    }
}

/// The target's Fisher metric, using its closed-form acceleration when available.
#[derive(Clone, Copy)]
pub struct FisherMetric<'a> {
    target: &'a dyn Target,
    numeric: bool,
}

impl<'a> FisherMetric<'a> {
    pub fn new(target: &'a dyn Target) -> Result<Self> {
        if target.fisher(&Vector::zeros(target.dim())).is_none() {
            return Err(Error::Unsupported(format!(
                "target `{}` has no Fisher metric",
                target.name()
            )));
        }
        Ok(Self {
            target,
            numeric: false,
        })
    }

    /// Ignores closed forms and differentiates the tensor numerically.
    pub fn numeric(mut self) -> Self {
        self.numeric = true;
        self
    }
}

impl Metric for FisherMetric<'_> {
    fn dim(&self) -> usize {
        self.target.dim()
    }

    fn tensor(&self, theta: &Vector) -> Result<Matrix> {
        self.target
            .fisher(theta)
            .ok_or_else(|| Error::Unsupported("Fisher metric unavailable".into()))
    }

    fn accel(&self, theta: &Vector, v: &Vector) -> Result<Vector> {
        if !self.numeric {
            if let Some(a) = self.target.fisher_accel(theta, v) {
                return a;
            }
        }
        numeric_accel(&|t: &Vector| self.tensor(t), theta, v, default_step())
    }

    fn log_det_grad(&self, theta: &Vector) -> Result<Vector> {
        if !self.numeric {
            if let Some(g) = self.target.fisher_log_det_grad(theta) {
                return g;
            }
        }
        log_det_grad(&|t: &Vector| self.log_det(t), theta, default_step())
    }
}

/// Σₙ sₙsₙᵀ plus the prior precision, differentiated numerically.
#[derive(Clone, Copy)]
pub struct EmpiricalFisherMetric<'a> {
    target: &'a dyn Target,
}

impl<'a> EmpiricalFisherMetric<'a> {
    pub fn new(target: &'a dyn Target) -> Result<Self> {
        empirical_fisher(target, &Vector::zeros(target.dim()))?;
        Ok(Self { target })
    }
}

impl Metric for EmpiricalFisherMetric<'_> {
    fn dim(&self) -> usize {
        self.target.dim()
    }

    fn tensor(&self, theta: &Vector) -> Result<Matrix> {
        empirical_fisher(self.target, theta)
    }
}
