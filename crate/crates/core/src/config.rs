//! Experiment configuration and target construction from JSON.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laplace::ApproxConfig;
use crate::linalg::{Matrix, Vector};
use crate::reference::McmcConfig;
use crate::targets::{
    banana_target, funnel_target, gaussian_target, generate_banana_data, load_csv_dataset, logreg_target,
    mlp_target, squiggle_target, synthetic, BananaConfig, BananaTarget, Dataset, FunnelTarget, GaussianTarget,
    LogisticTarget, MlpConfig, MlpTarget, SquiggleTarget, Target,
};

/// Environment variable naming the directory that holds dataset CSVs.
pub const DATA_DIR_ENV: &str = "RIEMLAP_DATA_DIR";

/// Logistic-regression datasets known by name, with their file names.
pub const LOGREG_DATASETS: &[(&str, &str)] = &[
    ("ripley", "ripley.csv"),
    ("pima", "pima.csv"),
    ("heart", "heart.csv"),
    ("australian", "australian.csv"),
    ("german", "german.csv"),
];

pub const REGRESSION_DATASETS: &[(&str, &str)] = &[("snelson", "snelson.csv")];

pub fn data_dir() -> PathBuf {
    std::env::var_os(DATA_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("data"))
}

fn default_true() -> bool {
    true
}

fn default_alpha() -> f64 {
    100.0
}

fn default_a() -> f64 {
    1.5
}

fn default_s() -> Vec<Vec<f64>> {
    vec![vec![5.0, 0.0], vec![0.0, 0.05]]
}

fn default_sigma() -> f64 {
    3.0
}

fn default_snelson() -> String {
    "snelson".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    /// 50 random held-out test points.
    #[default]
    Complete,
    /// Training inputs outside [1.5, 3]; test inputs inside.
    Gap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpec {
    Gaussian {
        mean: Vec<f64>,
        cov: Vec<Vec<f64>>,
    },
    IsotropicGaussian {
        dim: usize,
    },
    Banana {
        #[serde(default)]
        sigma_theta: Option<f64>,
        #[serde(default)]
        sigma_y: Option<f64>,
        #[serde(default)]
        n_obs: Option<usize>,
        #[serde(default)]
        theta1_true: Option<f64>,
        #[serde(default)]
        theta2sq_true: Option<f64>,
        /// Seed for the simulated observations; the run seed when absent.
        #[serde(default)]
        data_seed: Option<u64>,
    },
    Squiggle {
        #[serde(default = "default_a")]
        a: f64,
        #[serde(default = "default_s")]
        s: Vec<Vec<f64>>,
    },
    Funnel {
        #[serde(default = "default_sigma")]
        sigma: f64,
    },
    Logreg {
        /// A known dataset name or a CSV path.
        dataset: String,
        #[serde(default = "default_true")]
        standardize: bool,
        #[serde(default = "default_true")]
        add_intercept: bool,
        #[serde(default = "default_alpha")]
        alpha: f64,
        /// Use the seeded stand-in generator instead of a CSV file.
        #[serde(default)]
        synthetic: bool,
    },
    Mlp {
        #[serde(default = "default_snelson")]
        dataset: String,
        #[serde(default)]
        split: Split,
        #[serde(default)]
        hidden: Option<usize>,
        #[serde(default)]
        noise_std: Option<f64>,
        #[serde(default)]
        prior_prec: Option<f64>,
        #[serde(default)]
        synthetic: bool,
    },
}

fn matrix_from_rows(rows: &[Vec<f64>], field: &str) -> Result<Matrix> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidConfig(format!("{field} must be a non-empty square matrix")));
    }
    Ok(Matrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn resolve_dataset_path(dataset: &str, known: &[(&str, &str)]) -> PathBuf {
    match known.iter().find(|(name, _)| *name == dataset) {
        Some((_, file)) => data_dir().join(file),
        None => PathBuf::from(dataset),
    }
}

fn missing_dataset(dataset: &str, path: &Path, known: &[(&str, &str)]) -> Error {
    let files: Vec<String> = known.iter().map(|(_, f)| f.to_string()).collect();
    Error::Dataset(format!(
        "dataset `{dataset}` not found at {}; place the expected files ({}) in ${DATA_DIR_ENV} \
         (currently {}), or set `synthetic: true` to use the seeded stand-in",
        path.display(),
        files.join(", "),
        data_dir().display()
    ))
}

/// Raw logistic dataset (no preprocessing) and a description of its source.
pub fn logreg_dataset(dataset: &str, synthetic_data: bool, seed: u64) -> Result<(Dataset, String)> {
    if synthetic_data {
        let ds = match dataset {
            "ripley" => synthetic::ripley_like(seed),
            "pima" => synthetic::pima_like(seed),
            "heart" => synthetic::heart_like(seed),
            "australian" => synthetic::australian_like(seed),
            "german" => synthetic::german_like(seed),
            other => {
                return Err(Error::InvalidConfig(format!(
                    "no synthetic stand-in for dataset `{other}`"
                )))
            }
        };
        return Ok((ds, format!("synthetic:{dataset}")));
    }
    let path = resolve_dataset_path(dataset, LOGREG_DATASETS);
    if !path.exists() {
        return Err(missing_dataset(dataset, &path, LOGREG_DATASETS));
    }
    Ok((load_csv_dataset(&path, false, false)?, format!("file:{}", path.display())))
}

pub fn regression_dataset(dataset: &str, synthetic_data: bool, seed: u64) -> Result<(Dataset, String)> {
    if synthetic_data {
        if dataset != "snelson" {
            return Err(Error::InvalidConfig(format!("no synthetic stand-in for dataset `{dataset}`")));
        }
        return Ok((synthetic::snelson_like(seed), "synthetic:snelson".into()));
    }
    let path = resolve_dataset_path(dataset, REGRESSION_DATASETS);
    if !path.exists() {
        return Err(missing_dataset(dataset, &path, REGRESSION_DATASETS));
    }
    Ok((load_csv_dataset(&path, false, false)?, format!("file:{}", path.display())))
}

/// Applies the optional z-scoring and trailing intercept column.
pub fn preprocess_logreg(ds: Dataset, standardize: bool, add_intercept: bool) -> Result<Dataset> {
    ds.validate_binary()?;
    let ds = if standardize { ds.standardize()? } else { ds };
    Ok(if add_intercept { ds.with_intercept() } else { ds })
}

/// Train/test split for the regression experiment.
pub fn split_regression(ds: &Dataset, split: Split) -> (Dataset, Dataset) {
    match split {
        Split::Complete => synthetic::split_complete(ds, 50, 1),
        Split::Gap => synthetic::split_gap(ds, 1.5, 3.0),
    }
}

/// A constructed target together with what evaluation needs from it.
pub enum Model {
    Gaussian(GaussianTarget),
    Banana(BananaTarget),
    Squiggle(SquiggleTarget),
    Funnel(FunnelTarget),
    Logreg(LogisticTarget),
    Mlp { target: MlpTarget, test: Dataset },
}

impl Model {
    pub fn target(&self) -> &dyn Target {
        match self {
            Model::Gaussian(t) => t,
            Model::Banana(t) => t,
            Model::Squiggle(t) => t,
            Model::Funnel(t) => t,
            Model::Logreg(t) => t,
            Model::Mlp { target, .. } => target,
        }
    }
}

pub struct BuiltModel {
    pub model: Model,
    /// Where data came from, when the target has data.
    pub data_source: Option<String>,
}

impl TargetSpec {
    /// Builds the target; `seed` feeds simulated data when the spec does not fix it.
    pub fn build(&self, seed: u64) -> Result<BuiltModel> {
        let plain = |model| Ok(BuiltModel { model, data_source: None });
        match self {
            TargetSpec::Gaussian { mean, cov } => {
                let cov = matrix_from_rows(cov, "target.cov")?;
                if mean.len() != cov.nrows() {
                    return Err(Error::InvalidConfig("target.mean and target.cov sizes differ".into()));
                }
                plain(Model::Gaussian(gaussian_target(Vector::from_column_slice(mean), cov)?))
            }
            TargetSpec::IsotropicGaussian { dim } => {
                if *dim == 0 {
                    return Err(Error::InvalidConfig("target.dim must be >= 1".into()));
                }
                plain(Model::Gaussian(GaussianTarget::isotropic(*dim)))
            }
            TargetSpec::Banana {
                sigma_theta,
                sigma_y,
                n_obs,
                theta1_true,
                theta2sq_true,
                data_seed,
            } => {
                let d = BananaConfig::default();
                let cfg = BananaConfig {
                    sigma_theta: sigma_theta.unwrap_or(d.sigma_theta),
                    sigma_y: sigma_y.unwrap_or(d.sigma_y),
                    n_obs: n_obs.unwrap_or(d.n_obs),
                    theta1_true: theta1_true.unwrap_or(d.theta1_true),
                    theta2sq_true: theta2sq_true.unwrap_or(d.theta2sq_true),
                };
                cfg.validate()?;
                let data_seed = data_seed.unwrap_or(seed);
                let data = generate_banana_data(&cfg, data_seed);
                Ok(BuiltModel {
                    model: Model::Banana(banana_target(cfg, data)?),
                    data_source: Some(format!("simulated:seed={data_seed}")),
                })
            }
            TargetSpec::Squiggle { a, s } => {
                plain(Model::Squiggle(squiggle_target(*a, matrix_from_rows(s, "target.s")?)?))
            }
            TargetSpec::Funnel { sigma } => plain(Model::Funnel(funnel_target(*sigma)?)),
            TargetSpec::Logreg {
                dataset,
                standardize,
                add_intercept,
                alpha,
                synthetic,
            } => {
                let (raw, source) = logreg_dataset(dataset, *synthetic, 0)?;
                let ds = preprocess_logreg(raw, *standardize, *add_intercept)?;
                Ok(BuiltModel {
                    model: Model::Logreg(logreg_target(&ds, *alpha)?),
                    data_source: Some(source),
                })
            }
            TargetSpec::Mlp {
                dataset,
                split,
                hidden,
                noise_std,
                prior_prec,
                synthetic,
            } => {
                let d = MlpConfig::default();
                let cfg = MlpConfig {
                    hidden: hidden.unwrap_or(d.hidden),
                    noise_std: noise_std.unwrap_or(d.noise_std),
                    prior_prec: prior_prec.unwrap_or(d.prior_prec),
                };
                let (ds, source) = regression_dataset(dataset, *synthetic, 0)?;
                let (train, test) = split_regression(&ds, *split);
                Ok(BuiltModel {
                    model: Model::Mlp {
                        target: mlp_target(cfg, &train)?,
                        test,
                    },
                    data_source: Some(source),
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReferenceSpec {
    Exact {
        #[serde(default)]
        n: Option<usize>,
    },
    Rwm(McmcConfig),
    Csv {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub target: TargetSpec,
    #[serde(default)]
    pub approx: ApproxConfig,
    #[serde(default)]
    pub reference: Option<ReferenceSpec>,
    #[serde(default = "default_repeats")]
    pub n_repeats: usize,
}

fn default_repeats() -> usize {
    5
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de)
            .map_err(|e| Error::InvalidConfig(format!("at `{}`: {}", e.path(), e.inner())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.approx.validate()?;
        if self.n_repeats == 0 {
            return Err(Error::InvalidConfig("n_repeats must be >= 1".into()));
        }
        if let Some(ReferenceSpec::Csv { path }) = &self.reference {
            if !path.exists() {
                return Err(Error::InvalidConfig(format!(
                    "reference.path {} does not exist",
                    path.display()
                )));
            }
        }
        if let Some(ReferenceSpec::Rwm(m)) = &self.reference {
            m.validate()?;
        }
        Ok(())
    }
}
