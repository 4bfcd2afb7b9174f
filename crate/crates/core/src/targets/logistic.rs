use super::{sigmoid, softplus, Dataset, Target};
use crate::error::{Error, Result};
use crate::linalg::{cholesky_with_jitter, Matrix, Vector};

/// Bayesian logistic regression with prior θ ~ N(0, α I).
#[derive(Debug, Clone)]
pub struct LogisticTarget {
    x: Matrix,
    y: Vector,
    alpha: f64,
}

pub fn logreg_target(data: &Dataset, alpha: f64) -> Result<LogisticTarget> {
    data.validate_binary()?;
    if !(alpha > 0.0) {
        return Err(Error::InvalidConfig("logistic prior variance alpha must be > 0".into()));
    }
    Ok(LogisticTarget {
        x: data.x.clone(),
        y: data.y.clone(),
        alpha,
    })
}

impl LogisticTarget {
    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    fn probs(&self, theta: &Vector) -> Vector {
        (&self.x * theta).map(sigmoid)
    }

    /// Λ = diag(sₙ(1 − sₙ)).
    fn weights(&self, s: &Vector) -> Vector {
        s.map(|p| p * (1.0 - p))
    }

    fn weighted_gram(&self, w: &Vector) -> Matrix {
        let mut xw = self.x.clone();
        for (r, wr) in w.iter().enumerate() {
            xw.row_mut(r).scale_mut(*wr);
        }
        self.x.transpose() * xw
    }
}

impl Target for LogisticTarget {
    fn name(&self) -> &str {
        "logreg"
    }

    fn dim(&self) -> usize {
        self.x.ncols()
    }

    fn log_density(&self, theta: &Vector) -> f64 {
        let eta = &self.x * theta;
        let lik: f64 = eta
            .iter()
            .zip(self.y.iter())
            .map(|(e, y)| y * e - softplus(*e))
            .sum();
        lik - theta.norm_squared() / (2.0 * self.alpha)
    }

    fn grad(&self, theta: &Vector) -> Vector {
        let s = self.probs(theta);
        self.x.transpose() * (&self.y - s) - theta / self.alpha
    }

    fn hvp(&self, theta: &Vector, v: &Vector) -> Vector {
        let s = self.probs(theta);
        let xv = &self.x * v;
        let w = self.weights(&s).component_mul(&xv);
        -(self.x.transpose() * w) - v / self.alpha
    }

    fn fisher(&self, theta: &Vector) -> Option<Matrix> {
        let s = self.probs(theta);
        let d = self.dim();
        Some(self.weighted_gram(&self.weights(&s)) + Matrix::identity(d, d) / self.alpha)
    }

    fn fisher_accel(&self, theta: &Vector, v: &Vector) -> Option<Result<Vector>> {
        Some(logistic_accel(self, theta, v))
    }

    fn fisher_log_det_grad(&self, theta: &Vector) -> Option<Result<Vector>> {
        // ∂ᵢ log det G = tr(G⁻¹ Xᵀ Λ Vⁱ X) = Σₖ sₖ(1−sₖ)(1−2sₖ) Xₖᵢ xₖᵀ G⁻¹ xₖ
        let s = self.probs(theta);
        let g = self.fisher(theta)?;
        let out = match cholesky_with_jitter(&g) {
            None => Err(Error::NonSpdMetric {
                theta: theta.iter().copied().collect(),
            }),
            Some(c) => {
                let ginv_xt = c.solve(&self.x.transpose());
                let mut q = Vector::zeros(self.x.nrows());
                for k in 0..self.x.nrows() {
                    let lev = self.x.row(k).dot(&ginv_xt.column(k).transpose());
                    q[k] = s[k] * (1.0 - s[k]) * (1.0 - 2.0 * s[k]) * lev;
                }
                Ok(self.x.transpose() * q)
            }
        };
        Some(out)
    }

    fn per_datum_scores(&self, theta: &Vector) -> Option<Matrix> {
        let r = &self.y - self.probs(theta);
        let mut s = self.x.clone();
        for (i, ri) in r.iter().enumerate() {
            s.row_mut(i).scale_mut(*ri);
        }
        Some(s)
    }

    fn prior_precision(&self) -> Option<Matrix> {
        let d = self.dim();
        Some(Matrix::identity(d, d) / self.alpha)
    }
}

/// Geodesic acceleration of the logistic Fisher metric.
///
/// ∂ᵢG_{jl} is totally symmetric, so the contraction collapses to
/// a = −½ G⁻¹ Xᵀ d with dₖ = sₖ(1−sₖ)(1−2sₖ)(Xv)ₖ².
pub fn logistic_accel(target: &LogisticTarget, theta: &Vector, v: &Vector) -> Result<Vector> {
    let s = target.probs(theta);
    let xv = &target.x * v;
    let d = Vector::from_fn(s.len(), |k, _| {
        s[k] * (1.0 - s[k]) * (1.0 - 2.0 * s[k]) * xv[k] * xv[k]
    });
    let rhs = target.x.transpose() * d;
    let g = target.fisher(theta).expect("logistic target has a Fisher metric");
    let chol = cholesky_with_jitter(&g).ok_or_else(|| Error::NonSpdMetric {
        theta: theta.iter().copied().collect(),
    })?;
    Ok(chol.solve(&rhs) * -0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> LogisticTarget {
        let x = Matrix::from_row_slice(4, 2, &[1.0, 0.5, -1.0, 2.0, 0.3, -0.7, 2.0, 1.0]);
        let y = Vector::from_vec(vec![1.0, 0.0, 0.0, 1.0]);
        logreg_target(&Dataset::new(x, y).unwrap(), 100.0).unwrap()
    }

    #[test]
    fn fisher_at_zero_uses_quarter_weights() {
        let t = toy();
        let g = t.fisher(&Vector::zeros(2)).unwrap();
        let expected = t.x.transpose() * &t.x * 0.25 + Matrix::identity(2, 2) * 0.01;
        assert!((g - expected).amax() < 1e-14);
    }

    #[test]
    fn accel_vanishes_at_zero() {
        let t = toy();
        let a = logistic_accel(&t, &Vector::zeros(2), &Vector::from_vec(vec![0.3, -2.0])).unwrap();
        assert!(a.amax() < 1e-15);
    }

    #[test]
    fn labels_must_be_binary() {
        let x = Matrix::from_row_slice(2, 1, &[1.0, 2.0]);
        let y = Vector::from_vec(vec![0.0, 2.0]);
        assert!(logreg_target(&Dataset::new(x, y).unwrap(), 1.0).is_err());
    }

    #[test]
    fn negative_hessian_equals_fisher() {
        let t = toy();
        let theta = Vector::from_vec(vec![0.7, -1.3]);
        let g = t.fisher(&theta).unwrap();
        for j in 0..2 {
            let col = -t.hvp(&theta, &Vector::from_fn(2, |i, _| (i == j) as u8 as f64));
            for i in 0..2 {
                assert!((col[i] - g[(i, j)]).abs() <= 1e-12 * g.amax());
            }
        }
    }
}
