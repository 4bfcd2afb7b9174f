use super::{check_dim, require_spd, Pushforward, Target, LN_2PI};
use crate::error::Result;
use crate::linalg::{log_det_from_chol, Matrix, Vector};

/// Multivariate normal N(mean, cov), fully normalized.
#[derive(Debug, Clone)]
pub struct GaussianTarget {
    mean: Vector,
    precision: Matrix,
    cov_chol: Matrix,
    log_norm: f64,
}

pub fn gaussian_target(mean: Vector, cov: Matrix) -> Result<GaussianTarget> {
    check_dim(mean.len(), cov.nrows())?;
    let chol = require_spd(&cov, "covariance")?;
    let precision = crate::linalg::symmetrize(&chol.inverse());
    let d = mean.len() as f64;
    let log_norm = -0.5 * (d * LN_2PI + log_det_from_chol(&chol));
    Ok(GaussianTarget {
        mean,
        precision,
        cov_chol: chol.l(),
        log_norm,
    })
}

impl GaussianTarget {
    pub fn isotropic(dim: usize) -> Self {
        gaussian_target(Vector::zeros(dim), Matrix::identity(dim, dim))
            .expect("identity covariance is SPD")
    }

    pub fn mean(&self) -> &Vector {
        &self.mean
    }

    pub fn precision(&self) -> &Matrix {
        &self.precision
    }
}

impl Target for GaussianTarget {
    fn name(&self) -> &str {
        "gaussian"
    }

    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn log_density(&self, theta: &Vector) -> f64 {
        let r = theta - &self.mean;
        self.log_norm - 0.5 * r.dot(&(&self.precision * &r))
    }

    fn grad(&self, theta: &Vector) -> Vector {
        -(&self.precision * (theta - &self.mean))
    }

    fn hvp(&self, _theta: &Vector, v: &Vector) -> Vector {
        -(&self.precision * v)
    }

    fn fisher(&self, _theta: &Vector) -> Option<Matrix> {
        Some(self.precision.clone())
    }

    fn fisher_accel(&self, _theta: &Vector, v: &Vector) -> Option<Result<Vector>> {
        Some(Ok(Vector::zeros(v.len())))
    }

    fn fisher_log_det_grad(&self, theta: &Vector) -> Option<Result<Vector>> {
        Some(Ok(Vector::zeros(theta.len())))
    }

    fn pushforward(&self) -> Option<&dyn Pushforward> {
        Some(self)
    }
}

impl Pushforward for GaussianTarget {
    fn base_dim(&self) -> usize {
        self.mean.len()
    }

    fn base_from_standard(&self, z: &Vector) -> Vector {
        &self.mean + &self.cov_chol * z
    }

    fn base_log_density(&self, psi: &Vector) -> f64 {
        self.log_density(psi)
    }

    fn forward(&self, psi: &Vector) -> Vector {
        psi.clone()
    }

    fn inverse(&self, theta: &Vector) -> Vector {
        theta.clone()
    }

    fn log_abs_det_jacobian(&self, _psi: &Vector) -> f64 {
        0.0
    }
}
