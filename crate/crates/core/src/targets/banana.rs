use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Target, LN_2PI};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::rng;

/// Prior/likelihood scales and the data-generating parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BananaConfig {
    pub sigma_theta: f64,
    pub sigma_y: f64,
    pub n_obs: usize,
    pub theta1_true: f64,
    pub theta2sq_true: f64,
}

impl Default for BananaConfig {
    fn default() -> Self {
        Self {
            sigma_theta: 2.0,
            sigma_y: 2.0,
            n_obs: 100,
            theta1_true: 0.5,
            theta2sq_true: 0.75,
        }
    }
}

impl BananaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_theta > 0.0) {
            return Err(Error::InvalidConfig("sigma_theta must be > 0".into()));
        }
        if !(self.sigma_y >= 0.0) {
            return Err(Error::InvalidConfig("sigma_y must be >= 0".into()));
        }
        if self.n_obs == 0 {
            return Err(Error::InvalidConfig("n_obs must be >= 1".into()));
        }
        Ok(())
    }
}

/// yₙ = θ₁ + θ₂² + σ_y εₙ with εₙ drawn from the seeded stream.
pub fn generate_banana_data(cfg: &BananaConfig, seed: u64) -> Vec<f64> {
    let mut rng = rng::stream(rng::salted(seed, rng::salt::DATA), 0);
    let mean = cfg.theta1_true + cfg.theta2sq_true;
    (0..cfg.n_obs)
        .map(|_| {
            let e: f64 = StandardNormal.sample(&mut rng);
            mean + cfg.sigma_y * e
        })
        .collect()
}

/// θᵢ ~ N(0, σθ²), yₙ | θ ~ N(θ₁ + θ₂², σ_y²).
#[derive(Debug, Clone)]
pub struct BananaTarget {
    cfg: BananaConfig,
    data: Vec<f64>,
    n: f64,
    y_mean: f64,
    // Σ (yₙ − ȳ)²
    y_ss: f64,
}

pub fn banana_target(cfg: BananaConfig, data: Vec<f64>) -> Result<BananaTarget> {
    cfg.validate()?;
    if !(cfg.sigma_y > 0.0) {
        return Err(Error::InvalidConfig("sigma_y must be > 0 for the posterior".into()));
    }
    if data.is_empty() {
        return Err(Error::InvalidConfig("banana data must be non-empty".into()));
    }
    if data.iter().any(|y| !y.is_finite()) {
        return Err(Error::InvalidConfig("banana data contains non-finite values".into()));
    }
    let n = data.len() as f64;
    let y_mean = data.iter().sum::<f64>() / n;
    let y_ss = data.iter().map(|y| (y - y_mean).powi(2)).sum();
    Ok(BananaTarget {
        cfg,
        data,
        n,
        y_mean,
        y_ss,
    })
}

impl BananaTarget {
    pub fn config(&self) -> &BananaConfig {
        &self.cfg
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    fn prior_prec(&self) -> f64 {
        1.0 / (self.cfg.sigma_theta * self.cfg.sigma_theta)
    }

    fn lik_prec(&self) -> f64 {
        1.0 / (self.cfg.sigma_y * self.cfg.sigma_y)
    }
}

impl Target for BananaTarget {
    fn name(&self) -> &str {
        "banana"
    }

    fn dim(&self) -> usize {
        2
    }

    fn log_density(&self, theta: &Vector) -> f64 {
        let (t1, t2) = (theta[0], theta[1]);
        let m = t1 + t2 * t2;
        let sq = self.y_ss + self.n * (self.y_mean - m).powi(2);
        let lik = -0.5 * self.lik_prec() * sq
            - self.n * (self.cfg.sigma_y.ln() + 0.5 * LN_2PI);
        let prior = -0.5 * self.prior_prec() * (t1 * t1 + t2 * t2)
            - 2.0 * (self.cfg.sigma_theta.ln() + 0.5 * LN_2PI);
        lik + prior
    }

    fn grad(&self, theta: &Vector) -> Vector {
        let (t1, t2) = (theta[0], theta[1]);
        let r = self.n * (self.y_mean - t1 - t2 * t2) * self.lik_prec();
        Vector::from_vec(vec![
            r - self.prior_prec() * t1,
            2.0 * t2 * r - self.prior_prec() * t2,
        ])
    }

    fn hvp(&self, theta: &Vector, v: &Vector) -> Vector {
        let (t1, t2) = (theta[0], theta[1]);
        let k = self.n * self.lik_prec();
        let r = k * (self.y_mean - t1 - t2 * t2);
        let h11 = -k - self.prior_prec();
        let h12 = -2.0 * k * t2;
        let h22 = -4.0 * k * t2 * t2 + 2.0 * r - self.prior_prec();
        Vector::from_vec(vec![h11 * v[0] + h12 * v[1], h12 * v[0] + h22 * v[1]])
    }

    fn fisher(&self, theta: &Vector) -> Option<Matrix> {
        let t2 = theta[1];
        let k = self.n * self.lik_prec();
        let p = self.prior_prec();
        Some(Matrix::from_row_slice(
            2,
            2,
            &[p + k, 2.0 * k * t2, 2.0 * k * t2, p + 4.0 * k * t2 * t2],
        ))
    }

    fn fisher_log_det_grad(&self, theta: &Vector) -> Option<Result<Vector>> {
        // det G = p(p + k) + 4 p k θ₂²
        let t2 = theta[1];
        let k = self.n * self.lik_prec();
        let p = self.prior_prec();
        let det = p * (p + k) + 4.0 * p * k * t2 * t2;
        Some(Ok(Vector::from_vec(vec![0.0, 8.0 * p * k * t2 / det])))
    }

    fn per_datum_scores(&self, theta: &Vector) -> Option<Matrix> {
        let (t1, t2) = (theta[0], theta[1]);
        let m = t1 + t2 * t2;
        let lp = self.lik_prec();
        let mut s = Matrix::zeros(self.data.len(), 2);
        for (i, y) in self.data.iter().enumerate() {
            let r = (y - m) * lp;
            s[(i, 0)] = r;
            s[(i, 1)] = 2.0 * t2 * r;
        }
        Some(s)
    }

    fn prior_precision(&self) -> Option<Matrix> {
        Some(Matrix::identity(2, 2) * self.prior_prec())
    }
}
