use super::{require_spd, Pushforward, Target, LN_2PI};
use crate::error::{Error, Result};
use crate::linalg::{log_det_from_chol, Matrix, Vector};

/// Density of ψ = (θ₁, θ₂ + sin(aθ₁)) under N(0, S).
///
/// The shear has unit Jacobian, so no volume correction enters the density.
#[derive(Debug, Clone)]
pub struct SquiggleTarget {
    a: f64,
    s_inv: Matrix,
    s_chol: Matrix,
    log_norm: f64,
}

pub fn squiggle_target(a: f64, s: Matrix) -> Result<SquiggleTarget> {
    if s.nrows() != 2 || s.ncols() != 2 {
        return Err(Error::InvalidConfig("squiggle S must be 2x2".into()));
    }
    if !a.is_finite() {
        return Err(Error::InvalidConfig("squiggle a must be finite".into()));
    }
    let chol = require_spd(&s, "squiggle S")?;
    let log_norm = -(LN_2PI + 0.5 * log_det_from_chol(&chol));
    Ok(SquiggleTarget {
        a,
        s_inv: crate::linalg::symmetrize(&chol.inverse()),
        s_chol: chol.l(),
        log_norm,
    })
}

impl SquiggleTarget {
    pub fn a(&self) -> f64 {
        self.a
    }

    fn psi(&self, theta: &Vector) -> Vector {
        Vector::from_vec(vec![theta[0], theta[1] + (self.a * theta[0]).sin()])
    }

    /// ∂ψ/∂θ
    fn inverse_jacobian(&self, theta: &Vector) -> Matrix {
        Matrix::from_row_slice(2, 2, &[1.0, 0.0, self.a * (self.a * theta[0]).cos(), 1.0])
    }
}

impl Target for SquiggleTarget {
    fn name(&self) -> &str {
        "squiggle"
    }

    fn dim(&self) -> usize {
        2
    }

    fn log_density(&self, theta: &Vector) -> f64 {
        self.base_log_density(&self.psi(theta))
    }

    fn grad(&self, theta: &Vector) -> Vector {
        let w = -(&self.s_inv * self.psi(theta));
        self.inverse_jacobian(theta).transpose() * w
    }

    fn hvp(&self, theta: &Vector, v: &Vector) -> Vector {
        let j = self.inverse_jacobian(theta);
        let w = -(&self.s_inv * self.psi(theta));
        let mut h = -(j.transpose() * &self.s_inv * &j);
        h[(0, 0)] -= w[1] * self.a * self.a * (self.a * theta[0]).sin();
        h * v
    }

    fn fisher(&self, theta: &Vector) -> Option<Matrix> {
        let j = self.inverse_jacobian(theta);
        Some(crate::linalg::symmetrize(&(j.transpose() * &self.s_inv * &j)))
    }

    fn fisher_log_det_grad(&self, theta: &Vector) -> Option<Result<Vector>> {
        Some(Ok(Vector::zeros(theta.len())))
    }

    fn pushforward(&self) -> Option<&dyn Pushforward> {
        Some(self)
    }
}

impl Pushforward for SquiggleTarget {
    fn base_dim(&self) -> usize {
        2
    }

    fn base_from_standard(&self, z: &Vector) -> Vector {
        &self.s_chol * z
    }

    fn base_log_density(&self, psi: &Vector) -> f64 {
        self.log_norm - 0.5 * psi.dot(&(&self.s_inv * psi))
    }

    fn forward(&self, psi: &Vector) -> Vector {
        Vector::from_vec(vec![psi[0], psi[1] - (self.a * psi[0]).sin()])
    }

    fn inverse(&self, theta: &Vector) -> Vector {
        self.psi(theta)
    }

    fn log_abs_det_jacobian(&self, _psi: &Vector) -> f64 {
        0.0
    }
}
