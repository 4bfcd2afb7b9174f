use serde::{Deserialize, Serialize};

use super::{Dataset, Target, LN_2PI};
use crate::error::{Error, Result};
use crate::linalg::{cholesky_with_jitter, Matrix, Vector};

/// 1-`hidden`-1 tanh regression network with Gaussian noise and prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub hidden: usize,
    pub noise_std: f64,
    pub prior_prec: f64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden: 10,
            noise_std: 0.3,
            prior_prec: 1.0,
        }
    }
}

impl MlpConfig {
    /// Weights and biases of both layers.
    pub fn n_params(&self) -> usize {
        3 * self.hidden + 1
    }
}

/// Parameters are laid out as `[w1; b1; w2; b2]`.
#[derive(Debug, Clone)]
pub struct MlpTarget {
    cfg: MlpConfig,
    x: Vec<f64>,
    y: Vector,
}

pub fn mlp_target(cfg: MlpConfig, data: &Dataset) -> Result<MlpTarget> {
    if data.n_features() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: data.n_features(),
        });
    }
    if cfg.hidden == 0 || !(cfg.noise_std > 0.0) || !(cfg.prior_prec > 0.0) {
        return Err(Error::InvalidConfig(
            "mlp requires hidden >= 1, noise_std > 0 and prior_prec > 0".into(),
        ));
    }
    Ok(MlpTarget {
        cfg,
        x: data.x.column(0).iter().copied().collect(),
        y: data.y.clone(),
    })
}

impl MlpTarget {
    pub fn config(&self) -> &MlpConfig {
        &self.cfg
    }

    pub fn predict(&self, theta: &Vector, x: f64) -> f64 {
        let h = self.cfg.hidden;
        let mut f = theta[3 * h];
        for j in 0..h {
            f += theta[2 * h + j] * fast_tanh(theta[j] * x + theta[h + j]);
        }
        f
    }

    /// tanh of each hidden pre-activation written into `t`; returns f(x).
    fn hidden_activations(&self, theta: &Vector, x: f64, t: &mut [f64]) -> f64 {
        let h = self.cfg.hidden;
        let mut f = theta[3 * h];
        for j in 0..h {
            t[j] = fast_tanh(theta[j] * x + theta[h + j]);
            f += theta[2 * h + j] * t[j];
        }
        f
    }

    /// ∂f(x)/∂θ written into `out`; returns f(x).
    pub fn jacobian_row(&self, theta: &Vector, x: f64, out: &mut [f64]) -> f64 {
        let h = self.cfg.hidden;
        let mut f = theta[3 * h];
        for j in 0..h {
            let t = fast_tanh(theta[j] * x + theta[h + j]);
            let w2 = theta[2 * h + j];
            let dt = w2 * (1.0 - t * t);
            out[j] = dt * x;
            out[h + j] = dt;
            out[2 * h + j] = t;
            f += w2 * t;
        }
        out[3 * h] = 1.0;
        f
    }

    /// Per-datum Jacobian (N × D) and predictions.
    pub fn jacobian(&self, theta: &Vector) -> (Matrix, Vector) {
        let d = self.cfg.n_params();
        let n = self.x.len();
        let mut j = Matrix::zeros(n, d);
        let mut f = Vector::zeros(n);
        let mut row = vec![0.0; d];
        for (i, &xi) in self.x.iter().enumerate() {
            f[i] = self.jacobian_row(theta, xi, &mut row);
            for k in 0..d {
                j[(i, k)] = row[k];
            }
        }
        (j, f)
    }

    fn noise_prec(&self) -> f64 {
        1.0 / (self.cfg.noise_std * self.cfg.noise_std)
    }

    /// Adds w · ∇²f(x) v into `out` and returns vᵀ∇²f(x) v.
    ///
    /// Per hidden unit z = w₁x + b₁ and f ∋ w₂ tanh z, so the only nonzero
    /// second derivatives are within a unit: with s = 1 − tanh²z and
    /// t'' = −2 tanh z · s, ∂²f/∂(w₁,b₁)² = w₂ t'' (x², x; x, 1) and
    /// ∂²f/∂w₂∂(w₁,b₁) = s (x, 1).
    fn second_order(&self, theta: &Vector, v: &Vector, x: f64, w: f64, out: &mut Vector) -> f64 {
        let h = self.cfg.hidden;
        let mut quad = 0.0;
        for j in 0..h {
            let t = fast_tanh(theta[j] * x + theta[h + j]);
            let s = 1.0 - t * t;
            let tpp = -2.0 * t * s;
            let c = theta[2 * h + j];
            let (va, vb, vc) = (v[j], v[h + j], v[2 * h + j]);
            let dz = va * x + vb;
            let hz = c * tpp * dz + s * vc;
            out[j] += w * hz * x;
            out[h + j] += w * hz;
            out[2 * h + j] += w * s * dz;
            quad += c * tpp * dz * dz + 2.0 * s * dz * vc;
        }
        quad
    }

    /// hₙ = vᵀ∇²fₙ v for every training input.
    pub fn curvature_along(&self, theta: &Vector, v: &Vector) -> Vector {
        let mut scratch = Vector::zeros(theta.len());
        Vector::from_iterator(
            self.x.len(),
            self.x.iter().map(|&x| self.second_order(theta, v, x, 0.0, &mut scratch)),
        )
    }

    /// Fisher metric from a precomputed Jacobian.
    fn fisher_from_jacobian(&self, j: &Matrix) -> Matrix {
        let d = j.ncols();
        j.transpose() * j * self.noise_prec() + Matrix::identity(d, d) * self.cfg.prior_prec
    }
}

impl Target for MlpTarget {
    fn name(&self) -> &str {
        "mlp"
    }

    fn dim(&self) -> usize {
        self.cfg.n_params()
    }

    fn log_density(&self, theta: &Vector) -> f64 {
        let sq: f64 = self
            .x
            .iter()
            .zip(self.y.iter())
            .map(|(&x, &y)| (y - self.predict(theta, x)).powi(2))
            .sum();
        let n = self.x.len() as f64;
        -0.5 * self.noise_prec() * sq
            - n * (self.cfg.noise_std.ln() + 0.5 * LN_2PI)
            - 0.5 * self.cfg.prior_prec * theta.norm_squared()
    }

    fn grad(&self, theta: &Vector) -> Vector {
        let h = self.cfg.hidden;
        let prec = self.noise_prec();
        let mut out = theta * -self.cfg.prior_prec;
        let mut t = vec![0.0; h];
        for (&x, &y) in self.x.iter().zip(self.y.iter()) {
            let f = self.hidden_activations(theta, x, &mut t);
            let r = (y - f) * prec;
            for j in 0..h {
                let ds = r * theta[2 * h + j] * (1.0 - t[j] * t[j]);
                out[j] += ds * x;
                out[h + j] += ds;
                out[2 * h + j] += r * t[j];
            }
            out[3 * h] += r;
        }
        out
    }

    fn hvp(&self, theta: &Vector, v: &Vector) -> Vector {
        // −JᵀJv + Σₙ rₙ ∇²fₙ v, accumulated one datum at a time
        let h = self.cfg.hidden;
        let mut out = Vector::zeros(v.len());
        let mut t = vec![0.0; h];
        for (&x, &y) in self.x.iter().zip(self.y.iter()) {
            let f = self.hidden_activations(theta, x, &mut t);
            let r = y - f;
            let mut jv = v[3 * h];
            for j in 0..h {
                let s = 1.0 - t[j] * t[j];
                jv += theta[2 * h + j] * s * (v[j] * x + v[h + j]) + t[j] * v[2 * h + j];
            }
            for j in 0..h {
                let s = 1.0 - t[j] * t[j];
                let c = theta[2 * h + j];
                let dz = v[j] * x + v[h + j];
                let hz = c * (-2.0 * t[j] * s) * dz + s * v[2 * h + j];
                let dfz = c * s;
                out[j] += r * hz * x - jv * dfz * x;
                out[h + j] += r * hz - jv * dfz;
                out[2 * h + j] += r * s * dz - jv * t[j];
            }
            out[3 * h] -= jv;
        }
        out * self.noise_prec() - v * self.cfg.prior_prec
    }

    fn fisher(&self, theta: &Vector) -> Option<Matrix> {
        let (j, _) = self.jacobian(theta);
        Some(self.fisher_from_jacobian(&j))
    }

    fn fisher_accel(&self, theta: &Vector, v: &Vector) -> Option<Result<Vector>> {
        Some(mlp_accel(self, theta, v))
    }

    fn per_datum_scores(&self, theta: &Vector) -> Option<Matrix> {
        let (mut j, f) = self.jacobian(theta);
        let r = (&self.y - f) * self.noise_prec();
        for (i, ri) in r.iter().enumerate() {
            j.row_mut(i).scale_mut(*ri);
        }
        Some(j)
    }

    fn prior_precision(&self) -> Option<Matrix> {
        let d = self.dim();
        Some(Matrix::identity(d, d) * self.cfg.prior_prec)
    }
}

/// tanh through a single exp; absolute error stays at rounding level.
#[inline]
fn fast_tanh(z: f64) -> f64 {
    1.0 - 2.0 / ((2.0 * z).exp() + 1.0)
}

/// a = −(1/σ²) G⁻¹ Jᵀ h with hₙ = vᵀ∇²fₙ v.
pub fn mlp_accel(target: &MlpTarget, theta: &Vector, v: &Vector) -> Result<Vector> {
    let (j, _) = target.jacobian(theta);
    let g = target.fisher_from_jacobian(&j);
    let h = target.curvature_along(theta, v);
    let chol = cholesky_with_jitter(&g).ok_or_else(|| Error::NonSpdMetric {
        theta: theta.iter().copied().collect(),
    })?;
    Ok(chol.solve(&(j.transpose() * h)) * -target.noise_prec())
}
