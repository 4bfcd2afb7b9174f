//! MAP search, precision construction and the ELA / RLA sampling variants.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodesic::{exp_map, log_map, GeodesicStatus, IntegratorConfig, ShootingConfig};
use crate::geometry::{EmpiricalFisherMetric, FisherMetric, GaussianMongeMetric, Metric, MongeMetric};
use crate::linalg::{cholesky, covariance_factor, symmetrize, to_vec, Matrix, Vector};
use crate::optimize::{minimize, LbfgsConfig};
use crate::rng::{salt, salted, standard_normal_vector, stream};
use crate::targets::{empirical_fisher, Target};

macro_rules! keyword_enum {
    ($name:ident { $($variant:ident => $key:literal, $label:literal;)+ }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $key)] $variant,)+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            /// Identifier used in configs and on the command line.
            pub fn key(self) -> &'static str {
                match self { $($name::$variant => $key),+ }
            }

            /// Name used in reports.
            pub fn label(self) -> &'static str {
                match self { $($name::$variant => $label),+ }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.label())
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                let norm = s.to_ascii_lowercase().replace('-', "_");
                $(if norm == $key || s == $label { return Ok($name::$variant); })+
                let keys: Vec<&str> = vec![$($key),+];
                Err(Error::InvalidConfig(format!(
                    "unknown {} `{s}`; expected one of {}",
                    stringify!($name),
                    keys.join(", ")
                )))
            }
        }
    };
}

keyword_enum!(Variant {
    Ela => "ela", "ELA";
    RlaB => "rla_b", "RLA-B";
    RlaBlog => "rla_blog", "RLA-BLog";
    RlaF => "rla_f", "RLA-F";
});

keyword_enum!(MapKind {
    Euclidean => "euclidean", "Euclidean";
    Hausdorff => "hausdorff", "Hausdorff";
});

keyword_enum!(PrecisionKind {
    NegHessian => "neg_hessian", "Hessian";
    Fisher => "fisher", "Fisher";
});

keyword_enum!(FisherKind {
    Expected => "expected", "Fisher";
    Empirical => "empirical", "Empirical Fisher";
});

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ApproxConfig {
    pub variant: Variant,
    pub map_kind: MapKind,
    pub precision_kind: PrecisionKind,
    /// Which Fisher-type metric RLA-F, Hausdorff MAP and Fisher precision use.
    pub fisher_kind: FisherKind,
    pub n_samples: usize,
    pub seed: u64,
    pub restarts: usize,
    pub integrator: IntegratorConfig,
    pub shooting: ShootingConfig,
    /// Tolerances for the RLA-BLog shooting solves; the shooting stops at
    /// 10·atol, which needs endpoints far more accurate than sampling does.
    pub log_map_integrator: IntegratorConfig,
}

impl Default for ApproxConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Ela,
            map_kind: MapKind::Euclidean,
            precision_kind: PrecisionKind::NegHessian,
            fisher_kind: FisherKind::Expected,
            n_samples: 2000,
            seed: 0,
            restarts: 20,
            integrator: IntegratorConfig::default(),
            shooting: ShootingConfig::default(),
            log_map_integrator: IntegratorConfig {
                rtol: 1e-9,
                atol: 1e-9,
                max_steps: 20_000,
                ..IntegratorConfig::default()
            },
        }
    }
}

impl ApproxConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::InvalidConfig("n_samples must be >= 1".into()));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidConfig("restarts must be >= 1".into()));
        }
        self.integrator.validate()?;
        self.log_map_integrator.validate()
    }

    fn needs_fisher(&self) -> bool {
        self.variant == Variant::RlaF
            || self.map_kind == MapKind::Hausdorff
            || self.precision_kind == PrecisionKind::Fisher
    }
}

/// Gaussian approximation N(θ̂, precision⁻¹) in the tangent space at θ̂.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceFit {
    pub theta_hat: Vector,
    pub precision: Matrix,
    /// Lower-triangular L with L Lᵀ = precision⁻¹.
    pub cov_chol: Matrix,
}

impl LaplaceFit {
    pub fn new(theta_hat: Vector, precision: Matrix) -> Result<Self> {
        let chol = cholesky(&precision)
            .ok_or_else(|| Error::NotSpd("Cholesky factorization of the precision failed".into()))?;
        let cov_chol = covariance_factor(&chol)
            .ok_or_else(|| Error::NotSpd("covariance is not positive definite".into()))?;
        Ok(Self {
            theta_hat,
            precision,
            cov_chol,
        })
    }

    pub fn dim(&self) -> usize {
        self.theta_hat.len()
    }

    pub fn covariance(&self) -> Matrix {
        &self.cov_chol * self.cov_chol.transpose()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleStatus {
    Ok,
    MaxStepsExceeded,
    MetricFailure,
    LogMapFailure,
}

impl From<GeodesicStatus> for SampleStatus {
    fn from(s: GeodesicStatus) -> Self {
        match s {
            GeodesicStatus::Ok => SampleStatus::Ok,
            GeodesicStatus::MaxStepsExceeded => SampleStatus::MaxStepsExceeded,
            GeodesicStatus::MetricFailure => SampleStatus::MetricFailure,
        }
    }
}

/// Samples in draw order, failed rows included but flagged.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub samples: Matrix,
    pub nfev: Vec<usize>,
    pub statuses: Vec<SampleStatus>,
    pub seed: u64,
}

impl SampleSet {
    pub fn from_rows(samples: Matrix, seed: u64) -> Self {
        let n = samples.nrows();
        Self {
            samples,
            nfev: vec![0; n],
            statuses: vec![SampleStatus::Ok; n],
            seed,
        }
    }

    pub fn len(&self) -> usize {
        self.statuses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statuses.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.samples.ncols()
    }

    pub fn n_ok(&self) -> usize {
        self.statuses.iter().filter(|s| **s == SampleStatus::Ok).count()
    }

    pub fn n_failed(&self) -> usize {
        self.len() - self.n_ok()
    }

    /// Rows whose status is ok.
    pub fn ok_samples(&self) -> Matrix {
        let rows: Vec<usize> = (0..self.len())
            .filter(|&i| self.statuses[i] == SampleStatus::Ok)
            .collect();
        self.samples.select_rows(rows.iter())
    }

    /// Mean function evaluations over ok samples.
    pub fn mean_nfev(&self) -> f64 {
        let ok: Vec<usize> = (0..self.len())
            .filter(|&i| self.statuses[i] == SampleStatus::Ok)
            .map(|i| self.nfev[i])
            .collect();
        if ok.is_empty() {
            return f64::NAN;
        }
        ok.iter().sum::<usize>() as f64 / ok.len() as f64
    }
}

fn multi_start(
    dim: usize,
    restarts: usize,
    seed: u64,
    fg: &(dyn Fn(&Vector) -> (f64, Vector) + Sync),
) -> Result<Vector> {
    let cfg = LbfgsConfig::default();
    let best = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(salted(seed, salt::MAP), r as u64);
            let x0 = standard_normal_vector(&mut rng, dim);
            minimize(fg, &x0, &cfg)
        })
        .filter(|res| res.f.is_finite() && res.x.iter().all(|v| v.is_finite()))
        .collect::<Vec<_>>()
        .into_iter()
        .min_by(|a, b| a.f.total_cmp(&b.f));
    best.map(|r| r.x).ok_or_else(|| {
        Error::MapFailure(format!("all {restarts} restarts ended at non-finite values"))
    })
}

/// argmax of the log-density over `restarts` standard-normal initializations.
pub fn find_map_euclidean(target: &dyn Target, restarts: usize, seed: u64) -> Result<Vector> {
    let fg = |x: &Vector| (-target.log_density(x), -target.grad(x));
    multi_start(target.dim(), restarts, seed, &fg)
}

/// argmax of π(θ) / √det G(θ).
pub fn find_map_hausdorff(
    target: &dyn Target,
    metric: &dyn Metric,
    restarts: usize,
    seed: u64,
) -> Result<Vector> {
    let fg = |x: &Vector| {
        let ld = metric.log_det(x);
        let ldg = metric.log_det_grad(x);
        match (ld, ldg) {
            (Ok(ld), Ok(ldg)) => (-target.log_density(x) + 0.5 * ld, -target.grad(x) + ldg * 0.5),
            _ => (f64::INFINITY, Vector::from_element(x.len(), f64::NAN)),
        }
    };
    multi_start(target.dim(), restarts, seed, &fg)
}

/// The Fisher-type metric selected by `kind`.
pub fn fisher_metric<'a>(target: &'a dyn Target, kind: FisherKind) -> Result<Box<dyn Metric + 'a>> {
    Ok(match kind {
        FisherKind::Expected => Box::new(FisherMetric::new(target)?),
        FisherKind::Empirical => Box::new(EmpiricalFisherMetric::new(target)?),
    })
}

/// Negative Hessian or Fisher information at θ̂.
pub fn build_precision(
    target: &dyn Target,
    theta_hat: &Vector,
    kind: PrecisionKind,
    fisher_kind: FisherKind,
) -> Result<Matrix> {
    let d = target.dim();
    match kind {
        PrecisionKind::NegHessian => {
            let mut h = Matrix::zeros(d, d);
            for i in 0..d {
                let mut e = Vector::zeros(d);
                e[i] = 1.0;
                h.set_column(i, &(-target.hvp(theta_hat, &e)));
            }
            let h = symmetrize(&h);
            if cholesky(&h).is_none() {
                return Err(Error::NonSpdPrecision {
                    theta: to_vec(theta_hat),
                });
            }
            Ok(h)
        }
        PrecisionKind::Fisher => {
            let g = match fisher_kind {
                FisherKind::Expected => target.fisher(theta_hat).ok_or_else(|| {
                    Error::Unsupported(format!("target `{}` has no Fisher metric", target.name()))
                })?,
                FisherKind::Empirical => empirical_fisher(target, theta_hat)?,
            };
            if cholesky(&g).is_none() {
                return Err(Error::NotSpd("Cholesky factorization of the Fisher precision failed".into()));
            }
            Ok(g)
        }
    }
}

/// MAP estimate and precision as selected by `cfg`.
pub fn fit(target: &dyn Target, cfg: &ApproxConfig) -> Result<LaplaceFit> {
    cfg.validate()?;
    if cfg.needs_fisher() {
        fisher_metric(target, cfg.fisher_kind)?;
    }
    let theta_hat = match cfg.map_kind {
        MapKind::Euclidean => find_map_euclidean(target, cfg.restarts, cfg.seed)?,
        MapKind::Hausdorff => {
            let metric = fisher_metric(target, cfg.fisher_kind)?;
            find_map_hausdorff(target, metric.as_ref(), cfg.restarts, cfg.seed)?
        }
    };
    let precision = build_precision(target, &theta_hat, cfg.precision_kind, cfg.fisher_kind)?;
    LaplaceFit::new(theta_hat, precision)
}

/// Tangent vector v = L z for sample `index`.
pub fn draw_velocity(fit: &LaplaceFit, seed: u64, index: usize) -> Vector {
    let mut rng = stream(salted(seed, salt::SAMPLER), index as u64);
    &fit.cov_chol * standard_normal_vector(&mut rng, fit.dim())
}

/// Draws `cfg.n_samples` points from the selected variant.
///
/// Per-sample geodesic failures are recorded in the statuses; only
/// configuration problems are returned as errors.
pub fn sample(fit: &LaplaceFit, target: &dyn Target, cfg: &ApproxConfig) -> Result<SampleSet> {
    cfg.validate()?;
    crate::targets::check_dim(target.dim(), fit.dim())?;
    let d = fit.dim();
    let monge = MongeMetric::new(target);
    let fisher = match cfg.variant {
        Variant::RlaF => Some(fisher_metric(target, cfg.fisher_kind)?),
        _ => None,
    };
    let base = match cfg.variant {
        Variant::RlaBlog => Some(GaussianMongeMetric::new(fit.theta_hat.clone(), fit.precision.clone())?),
        _ => None,
    };

    let one = |i: usize| -> (Vector, usize, SampleStatus) {
        let v = draw_velocity(fit, cfg.seed, i);
        let theta_hat = &fit.theta_hat;
        let geodesic = |metric: &dyn Metric, v: &Vector| {
            let r = exp_map(metric, theta_hat, v, &cfg.integrator);
            (r.endpoint, r.nfev, SampleStatus::from(r.status))
        };
        match cfg.variant {
            Variant::Ela => (theta_hat + v, 0, SampleStatus::Ok),
            Variant::RlaB => geodesic(&monge, &v),
            Variant::RlaF => geodesic(fisher.as_deref().expect("fisher metric built"), &v),
            Variant::RlaBlog => {
                let base = base.as_ref().expect("base metric built");
                let theta_bar = theta_hat + &v;
                match log_map(base, theta_hat, &theta_bar, &cfg.log_map_integrator, &cfg.shooting) {
                    Ok(v_log) => geodesic(&monge, &v_log),
                    Err(_) => (theta_bar, 0, SampleStatus::LogMapFailure),
                }
            }
        }
    };

    let results: Vec<(Vector, usize, SampleStatus)> =
        (0..cfg.n_samples).into_par_iter().map(one).collect();
    let mut samples = Matrix::zeros(cfg.n_samples, d);
    let mut nfev = Vec::with_capacity(cfg.n_samples);
    let mut statuses = Vec::with_capacity(cfg.n_samples);
    for (i, (theta, n, s)) in results.into_iter().enumerate() {
        samples.set_row(i, &theta.transpose());
        nfev.push(n);
        statuses.push(s);
    }
    Ok(SampleSet {
        samples,
        nfev,
        statuses,
        seed: cfg.seed,
    })
}
