//! Reference samplers: exact pushforward draws and adaptive random-walk Metropolis.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laplace::{build_precision, find_map_euclidean, FisherKind, PrecisionKind, SampleSet};
use crate::linalg::{cholesky, cholesky_with_jitter, covariance_factor, Matrix, Vector};
use crate::rng::{salt, salted, standard_normal_vector, stream};
use crate::targets::Target;

pub use crate::io::{read_samples_csv, write_samples_csv};

/// Draws ψ from the base Gaussian and maps it through the target's pushforward.
pub fn exact_samples(target: &dyn Target, n: usize, seed: u64) -> Result<SampleSet> {
    let pf = target.pushforward().ok_or_else(|| {
        Error::Unsupported(format!("target `{}` has no exact sampler", target.name()))
    })?;
    let rows: Vec<Vector> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(salted(seed, salt::EXACT), i as u64);
            let z = standard_normal_vector(&mut rng, pf.base_dim());
            pf.forward(&pf.base_from_standard(&z))
        })
        .collect();
    let d = target.dim();
    let mut m = Matrix::zeros(n, d);
    for (i, r) in rows.iter().enumerate() {
        m.set_row(i, &r.transpose());
    }
    Ok(SampleSet::from_rows(m, seed))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McmcConfig {
    pub n_keep: usize,
    pub warmup: usize,
    pub thin: usize,
    pub seed: u64,
    pub target_accept: f64,
    /// Starting point; the Euclidean MAP when absent.
    pub init: Option<Vec<f64>>,
    /// Keep every proposal and acceptance decision (for testing).
    pub record_transitions: bool,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            n_keep: 20000,
            warmup: 50000,
            thin: 10,
            seed: 0,
            target_accept: 0.234,
            init: None,
            record_transitions: false,
        }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.thin == 0 {
            return Err(Error::InvalidConfig("mcmc.thin must be >= 1".into()));
        }
        if self.n_keep == 0 {
            return Err(Error::InvalidConfig("mcmc.n_keep must be >= 1".into()));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(Error::InvalidConfig("mcmc.target_accept must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub log_density_current: f64,
    pub log_density_proposed: f64,
    pub uniform: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone)]
pub struct RwmOutput {
    pub samples: SampleSet,
    /// Acceptance rate after warmup.
    pub acceptance_rate: f64,
    pub warning: Option<String>,
    pub transitions: Vec<Transition>,
}

/// Running mean and covariance.
struct Welford {
    n: f64,
    mean: Vector,
    m2: Matrix,
}

impl Welford {
    fn new(d: usize) -> Self {
        Self {
            n: 0.0,
            mean: Vector::zeros(d),
            m2: Matrix::zeros(d, d),
        }
    }

    fn push(&mut self, x: &Vector) {
        self.n += 1.0;
        let delta = x - &self.mean;
        self.mean += &delta / self.n;
        let delta2 = x - &self.mean;
        self.m2 += &delta * delta2.transpose();
    }

    fn covariance(&self) -> Matrix {
        &self.m2 / (self.n - 1.0).max(1.0)
    }
}

fn initial_proposal_factor(target: &dyn Target, init: &Vector) -> Matrix {
    let d = init.len();
    let scaled_identity = || Matrix::identity(d, d) * 0.1;
    match build_precision(target, init, PrecisionKind::NegHessian, FisherKind::Expected) {
        Ok(p) => cholesky(&p)
            .and_then(|c| covariance_factor(&c))
            .unwrap_or_else(scaled_identity),
        Err(_) => scaled_identity(),
    }
}

/// Gaussian random-walk Metropolis with proposal adaptation during warmup.
///
/// The proposal covariance is s²·(2.38²/D)·C, where C starts at the inverse
/// negative Hessian at the initial point (identity·0.01 if that is not SPD) and
/// is replaced by the running empirical covariance during warmup, while log s
/// follows a Robbins–Monro recursion towards `target_accept`. Both freeze when
/// warmup ends.
pub fn rwm_samples(target: &dyn Target, cfg: &McmcConfig) -> Result<RwmOutput> {
    cfg.validate()?;
    let d = target.dim();
    let mut theta = match &cfg.init {
        Some(v) => {
            crate::targets::check_dim(d, v.len())?;
            Vector::from_column_slice(v)
        }
        None => find_map_euclidean(target, 5, cfg.seed).unwrap_or_else(|_| Vector::zeros(d)),
    };
    let mut logp = target.log_density(&theta);
    if !logp.is_finite() {
        return Err(Error::InvalidConfig("mcmc.init has non-finite log-density".into()));
    }

    let mut rng = stream(salted(cfg.seed, salt::RWM), 0);
    let base_scale = 2.38 / (d as f64).sqrt();
    let mut factor = initial_proposal_factor(target, &theta);
    let mut log_s = 0.0f64;
    let mut stats = Welford::new(d);
    let adapt_start = (cfg.warmup / 10).max(20 * d);

    let total = cfg.warmup + cfg.n_keep * cfg.thin;
    let mut kept = Matrix::zeros(cfg.n_keep, d);
    let mut n_kept = 0;
    let mut accepted_after = 0usize;
    let mut transitions = Vec::new();

    for iter in 0..total {
        let z = standard_normal_vector(&mut rng, d);
        let proposal = &theta + &factor * z * (base_scale * log_s.exp());
        let logp_new = target.log_density(&proposal);
        let u: f64 = rng.gen();
        let log_ratio = logp_new - logp;
        let accept = logp_new.is_finite() && u.ln() < log_ratio;
        let alpha = if logp_new.is_finite() { log_ratio.exp().min(1.0) } else { 0.0 };
        if cfg.record_transitions {
            transitions.push(Transition {
                log_density_current: logp,
                log_density_proposed: logp_new,
                uniform: u,
                accepted: accept,
            });
        }
        if accept {
            theta = proposal;
            logp = logp_new;
        }

        if iter < cfg.warmup {
            let gamma = 1.0 / ((iter as f64 / 100.0) + 1.0).powf(0.6);
            log_s += gamma * (alpha - cfg.target_accept);
            stats.push(&theta);
            if iter >= adapt_start && (iter - adapt_start) % 100 == 0 {
                let mut c = stats.covariance();
                let ridge = 1e-10 * (0..d).map(|i| c[(i, i)]).sum::<f64>() / d as f64;
                for i in 0..d {
                    c[(i, i)] += ridge;
                }
                if let Some(ch) = cholesky_with_jitter(&c) {
                    factor = ch.l();
                }
            }
        } else {
            accepted_after += usize::from(accept);
            let k = iter - cfg.warmup;
            if (k + 1) % cfg.thin == 0 && n_kept < cfg.n_keep {
                kept.set_row(n_kept, &theta.transpose());
                n_kept += 1;
            }
        }
    }

    let post = (total - cfg.warmup).max(1) as f64;
    let acceptance_rate = accepted_after as f64 / post;
    let warning = (!(0.05..=0.7).contains(&acceptance_rate)).then(|| {
        format!("random-walk acceptance rate {acceptance_rate:.3} is outside [0.05, 0.7]")
    });
    Ok(RwmOutput {
        samples: SampleSet::from_rows(kept, cfg.seed),
        acceptance_rate,
        warning,
        transitions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::{gaussian_target, GaussianTarget};

    #[test]
    fn exact_gaussian_mean_within_clt() {
        let t = gaussian_target(Vector::from_vec(vec![1.0, -2.0]), Matrix::identity(2, 2) * 4.0).unwrap();
        let s = exact_samples(&t, 4000, 5).unwrap();
        for c in 0..2 {
            let mean = s.samples.column(c).mean();
            assert!((mean - t.mean()[c]).abs() <= 3.0 * 2.0 / (4000f64).sqrt());
        }
    }

    #[test]
    fn rwm_standard_normal_moments() {
        let t = GaussianTarget::isotropic(1);
        let cfg = McmcConfig {
            n_keep: 5000,
            warmup: 5000,
            thin: 5,
            seed: 2,
            ..Default::default()
        };
        let out = rwm_samples(&t, &cfg).unwrap();
        let col = out.samples.samples.column(0);
        let mean = col.mean();
        let std = col.variance().sqrt();
        assert!(mean.abs() <= 0.1, "{mean}");
        assert!((0.9..=1.1).contains(&std), "{std}");
        assert!(out.warning.is_none());
    }

    #[test]
    fn metropolis_rule_on_logged_proposals() {
        let t = GaussianTarget::isotropic(2);
        let cfg = McmcConfig {
            n_keep: 500,
            warmup: 0,
            thin: 1,
            seed: 4,
            init: Some(vec![0.5, -0.5]),
            record_transitions: true,
            ..Default::default()
        };
        let out = rwm_samples(&t, &cfg).unwrap();
        assert_eq!(out.transitions.len(), 500);
        for tr in &out.transitions {
            let p = (tr.log_density_proposed - tr.log_density_current).exp().min(1.0);
            assert_eq!(tr.accepted, tr.uniform < p);
        }
    }
}
