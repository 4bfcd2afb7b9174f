//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;
pub type Chol = Cholesky<f64, Dyn>;

/// Cholesky factorization with a single jitter retry of `1e-9 * mean(diag)`.
pub fn cholesky_with_jitter(m: &Matrix) -> Option<Chol> {
    if !m.iter().all(|x| x.is_finite()) {
        return None;
    }
    if let Some(c) = Cholesky::new(m.clone()) {
        return Some(c);
    }
    let n = m.nrows();
    let mean_diag = (0..n).map(|i| m[(i, i)]).sum::<f64>() / n.max(1) as f64;
    let jitter = 1e-9 * mean_diag.abs().max(f64::MIN_POSITIVE);
    let mut j = m.clone();
    for i in 0..n {
        j[(i, i)] += jitter;
    }
    Cholesky::new(j)
}

/// Plain Cholesky, no jitter.
pub fn cholesky(m: &Matrix) -> Option<Chol> {
    if !m.iter().all(|x| x.is_finite()) {
        return None;
    }
    Cholesky::new(m.clone())
}

pub fn log_det_from_chol(c: &Chol) -> f64 {
    let l = c.l_dirty();
    2.0 * (0..l.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>()
}

pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// Largest |a_ij - a_ji| relative to the largest |a_ij|.
pub fn relative_asymmetry(m: &Matrix) -> f64 {
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..i {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst / scale
}

pub fn relative_error(a: &Vector, b: &Vector) -> f64 {
    let denom = a.norm().max(b.norm()).max(1e-300);
    (a - b).norm() / denom
}

pub fn to_vec(v: &Vector) -> Vec<f64> {
    v.iter().copied().collect()
}

/// Lower-triangular L with L Lᵀ = precision⁻¹.
pub fn covariance_factor(precision_chol: &Chol) -> Option<Matrix> {
    let cov = symmetrize(&precision_chol.inverse());
    Cholesky::new(cov).map(|c| c.l())
}
