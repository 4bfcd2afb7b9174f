use super::{Pushforward, Target, LN_2PI};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

/// Two-dimensional funnel, defined as the image of N(0, I) under
/// θ = (exp(σψ₂/2) ψ₁, σψ₂). Normalized.
#[derive(Debug, Clone)]
pub struct FunnelTarget {
    sigma: f64,
}

pub fn funnel_target(sigma: f64) -> Result<FunnelTarget> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidConfig("funnel sigma must be > 0".into()));
    }
    Ok(FunnelTarget { sigma })
}

impl FunnelTarget {
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// ∂ψ/∂θ
    fn inverse_jacobian(&self, theta: &Vector) -> Matrix {
        let e = (-0.5 * theta[1]).exp();
        Matrix::from_row_slice(2, 2, &[e, -0.5 * theta[0] * e, 0.0, 1.0 / self.sigma])
    }
}

impl Target for FunnelTarget {
    fn name(&self) -> &str {
        "funnel"
    }

    fn dim(&self) -> usize {
        2
    }

    fn log_density(&self, theta: &Vector) -> f64 {
        let psi = self.inverse(theta);
        self.base_log_density(&psi) - 0.5 * theta[1] - self.sigma.ln()
    }

    fn grad(&self, theta: &Vector) -> Vector {
        let (t1, t2) = (theta[0], theta[1]);
        let e = (-t2).exp();
        Vector::from_vec(vec![
            -t1 * e,
            0.5 * t1 * t1 * e - t2 / (self.sigma * self.sigma) - 0.5,
        ])
    }

    fn hvp(&self, theta: &Vector, v: &Vector) -> Vector {
        let (t1, t2) = (theta[0], theta[1]);
        let e = (-t2).exp();
        let h11 = -e;
        let h12 = t1 * e;
        let h22 = -0.5 * t1 * t1 * e - 1.0 / (self.sigma * self.sigma);
        Vector::from_vec(vec![h11 * v[0] + h12 * v[1], h12 * v[0] + h22 * v[1]])
    }

    fn fisher(&self, theta: &Vector) -> Option<Matrix> {
        let j = self.inverse_jacobian(theta);
        Some(crate::linalg::symmetrize(&(j.transpose() * j)))
    }

    fn fisher_log_det_grad(&self, _theta: &Vector) -> Option<Result<Vector>> {
        // log det G = −θ₂ − 2 log σ
        Some(Ok(Vector::from_vec(vec![0.0, -1.0])))
    }

    fn pushforward(&self) -> Option<&dyn Pushforward> {
        Some(self)
    }
}

impl Pushforward for FunnelTarget {
    fn base_dim(&self) -> usize {
        2
    }

    fn base_from_standard(&self, z: &Vector) -> Vector {
        z.clone()
    }

    fn base_log_density(&self, psi: &Vector) -> f64 {
        -LN_2PI - 0.5 * psi.norm_squared()
    }

    fn forward(&self, psi: &Vector) -> Vector {
        Vector::from_vec(vec![
            (0.5 * self.sigma * psi[1]).exp() * psi[0],
            self.sigma * psi[1],
        ])
    }

    fn inverse(&self, theta: &Vector) -> Vector {
        Vector::from_vec(vec![theta[0] * (-0.5 * theta[1]).exp(), theta[1] / self.sigma])
    }

    fn log_abs_det_jacobian(&self, psi: &Vector) -> f64 {
        0.5 * self.sigma * psi[1] + self.sigma.ln()
    }
}
