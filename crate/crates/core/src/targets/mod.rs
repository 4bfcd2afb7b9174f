//! Posterior targets with derivatives and Fisher metrics.

mod banana;
mod dataset;
mod funnel;
mod gaussian;
mod logistic;
mod mlp;
mod squiggle;
pub mod synthetic;

pub use banana::{banana_target, generate_banana_data, BananaConfig, BananaTarget};
pub use dataset::{load_csv_dataset, Dataset};
pub use funnel::{funnel_target, FunnelTarget};
pub use gaussian::{gaussian_target, GaussianTarget};
pub use logistic::{logistic_accel, logreg_target, LogisticTarget};
pub use mlp::{mlp_accel, mlp_target, MlpConfig, MlpTarget};
pub use squiggle::{squiggle_target, SquiggleTarget};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, Matrix, Vector};

/// A log-posterior with the derivatives the approximations need.
///
/// All methods are pure functions of `theta` and immutable data.
pub trait Target: Send + Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    /// log π(θ | y), up to an additive constant unless stated otherwise.
    fn log_density(&self, theta: &Vector) -> f64;

    fn grad(&self, theta: &Vector) -> Vector;

    /// Hessian of the log-density applied to `v`.
    fn hvp(&self, theta: &Vector, v: &Vector) -> Vector;

    /// Fisher metric (expected information plus negative log-prior Hessian).
    fn fisher(&self, _theta: &Vector) -> Option<Matrix> {
        None
    }

    /// Closed-form geodesic acceleration under [`Target::fisher`], if known.
    fn fisher_accel(&self, _theta: &Vector, _v: &Vector) -> Option<Result<Vector>> {
        None
    }

    /// Closed-form gradient of `log det fisher(θ)`, if known.
    fn fisher_log_det_grad(&self, _theta: &Vector) -> Option<Result<Vector>> {
        None
    }

    /// Per-datum score vectors ∇ log π(y_n | θ), one row per datum.
    fn per_datum_scores(&self, _theta: &Vector) -> Option<Matrix> {
        None
    }

    /// Negative Hessian of the log-prior (constant for Gaussian priors).
    fn prior_precision(&self) -> Option<Matrix> {
        None
    }

    /// The target as the image of a Gaussian under a diffeomorphism.
    fn pushforward(&self) -> Option<&dyn Pushforward> {
        None
    }
}

/// θ = φ(ψ) with ψ ~ N(μ, S).
pub trait Pushforward: Send + Sync {
    fn base_dim(&self) -> usize;

    /// Maps a standard-normal draw onto the base Gaussian.
    fn base_from_standard(&self, z: &Vector) -> Vector;

    fn base_log_density(&self, psi: &Vector) -> f64;

    fn forward(&self, psi: &Vector) -> Vector;

    fn inverse(&self, theta: &Vector) -> Vector;

    /// log |det ∂φ/∂ψ|.
    fn log_abs_det_jacobian(&self, psi: &Vector) -> f64;
}

/// Empirical Fisher: Σₙ sₙsₙᵀ plus the prior precision.
pub fn empirical_fisher(target: &dyn Target, theta: &Vector) -> Result<Matrix> {
    let scores = target.per_datum_scores(theta).ok_or_else(|| {
        Error::Unsupported(format!("target `{}` has no per-datum scores", target.name()))
    })?;
    let mut g = scores.transpose() * &scores;
    if let Some(p) = target.prior_precision() {
        g += p;
    }
    Ok(g)
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

pub(crate) fn require_spd(m: &Matrix, what: &str) -> Result<crate::linalg::Chol> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSpd(format!("{what} is not square")));
    }
    if crate::linalg::relative_asymmetry(m) > 1e-10 {
        return Err(Error::NotSpd(format!("{what} is not symmetric")));
    }
    cholesky(m).ok_or_else(|| Error::NotSpd(format!("Cholesky factorization of {what} failed")))
}

pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Numerically stable log(1 + exp(x)).
pub(crate) fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
