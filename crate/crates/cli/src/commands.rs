//! Subcommand implementations; each writes its outputs into a directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use riemlap_core::config::{ExperimentConfig, Model, ReferenceSpec};
use riemlap_core::evaluate::{predictive_metrics, wasserstein1_1d};
use riemlap_core::experiments::{reproduce, thin_rows, Experiment, ReproduceOptions, W1_SUBSAMPLE};
use riemlap_core::evaluate::wasserstein1;
use riemlap_core::io::{read_samples_csv, write_json, write_samples_csv};
use riemlap_core::laplace::{fit, sample, MapKind, PrecisionKind, SampleStatus, Variant};
use riemlap_core::reference::{exact_samples, rwm_samples};
use riemlap_core::{Error, Matrix, Result};

use crate::plot::render_svg;

/// Flag overrides applied on top of a config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub variant: Option<Variant>,
    pub map_kind: Option<MapKind>,
    pub precision: Option<PrecisionKind>,
    pub n_samples: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) -> Result<()> {
        if let Some(s) = self.seed {
            cfg.approx.seed = s;
        }
        if let Some(v) = self.variant {
            cfg.approx.variant = v;
        }
        if let Some(m) = self.map_kind {
            cfg.approx.map_kind = m;
        }
        if let Some(p) = self.precision {
            cfg.approx.precision_kind = p;
        }
        if let Some(n) = self.n_samples {
            cfg.approx.n_samples = n;
        }
        cfg.validate()
    }
}

#[derive(Serialize)]
struct RunRecord<'a, T: Serialize> {
    command: &'a str,
    version: &'a str,
    config: &'a T,
}

fn write_run<T: Serialize>(out: &Path, command: &str, config: &T) -> Result<()> {
    write_json(
        &out.join("run.json"),
        &RunRecord {
            command,
            version: env!("CARGO_PKG_VERSION"),
            config,
        },
    )
}

fn load(config: &Path, overrides: &Overrides) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(config)?;
    overrides.apply(&mut cfg)?;
    Ok(cfg)
}

fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[derive(Serialize)]
struct NfevStats {
    mean: f64,
    min: usize,
    max: usize,
}

#[derive(Serialize)]
struct Diagnostics {
    variant: &'static str,
    map_kind: &'static str,
    precision: &'static str,
    n_samples: usize,
    n_ok: usize,
    n_failed: usize,
    statuses: BTreeMap<String, usize>,
    nfev: NfevStats,
    theta_hat: Vec<f64>,
    log_density_at_map: f64,
    covariance: Vec<Vec<f64>>,
    data_source: Option<String>,
}

/// Writes `samples.csv`, `diagnostics.json` and `run.json` into `out`.
pub fn cmd_sample(config: &Path, overrides: &Overrides, out: &Path) -> Result<PathBuf> {
    let cfg = load(config, overrides)?;
    std::fs::create_dir_all(out)?;
    let built = cfg.target.build(cfg.approx.seed)?;
    let target = built.model.target();
    let f = fit(target, &cfg.approx)?;
    let s = sample(&f, target, &cfg.approx)?;

    let mut statuses = BTreeMap::new();
    for st in &s.statuses {
        let key = serde_json::to_value(st)?.as_str().unwrap_or_default().to_string();
        *statuses.entry(key).or_insert(0) += 1;
    }
    let ok_nfev: Vec<usize> = s
        .nfev
        .iter()
        .zip(&s.statuses)
        .filter(|(_, st)| **st == SampleStatus::Ok)
        .map(|(n, _)| *n)
        .collect();
    let diag = Diagnostics {
        variant: cfg.approx.variant.label(),
        map_kind: cfg.approx.map_kind.label(),
        precision: cfg.approx.precision_kind.label(),
        n_samples: s.len(),
        n_ok: s.n_ok(),
        n_failed: s.n_failed(),
        statuses,
        nfev: NfevStats {
            mean: s.mean_nfev(),
            min: ok_nfev.iter().copied().min().unwrap_or(0),
            max: ok_nfev.iter().copied().max().unwrap_or(0),
        },
        theta_hat: f.theta_hat.iter().copied().collect(),
        log_density_at_map: target.log_density(&f.theta_hat),
        covariance: rows(&f.covariance()),
        data_source: built.data_source,
    };
    let csv = out.join("samples.csv");
    write_samples_csv(&csv, &s.ok_samples())?;
    write_json(&out.join("diagnostics.json"), &diag)?;
    write_run(out, "sample", &cfg)?;
    Ok(csv)
}

#[derive(Serialize)]
struct MapReport {
    map_kind: &'static str,
    precision: &'static str,
    theta_hat: Vec<f64>,
    log_density: f64,
    precision_matrix: Vec<Vec<f64>>,
    covariance: Vec<Vec<f64>>,
}

/// Writes `map.json` (MAP and precision) and `run.json`.
pub fn cmd_map(config: &Path, overrides: &Overrides, out: &Path) -> Result<()> {
    let cfg = load(config, overrides)?;
    std::fs::create_dir_all(out)?;
    let built = cfg.target.build(cfg.approx.seed)?;
    let target = built.model.target();
    let f = fit(target, &cfg.approx)?;
    write_json(
        &out.join("map.json"),
        &MapReport {
            map_kind: cfg.approx.map_kind.label(),
            precision: cfg.approx.precision_kind.label(),
            theta_hat: f.theta_hat.iter().copied().collect(),
            log_density: target.log_density(&f.theta_hat),
            precision_matrix: rows(&f.precision),
            covariance: rows(&f.covariance()),
        },
    )?;
    write_run(out, "map", &cfg)
}

#[derive(Serialize, Default)]
struct Evaluation {
    n_samples: usize,
    reference: Option<String>,
    n_reference: Option<usize>,
    w1: Option<f64>,
    w1_first_dim: Option<f64>,
    /// W between two independent exact draws, when the reference is exact.
    floor_w1: Option<f64>,
    mse: Option<f64>,
    nll: Option<f64>,
    warnings: Vec<String>,
}

/// Scores `samples` against the configured reference and writes `evaluation.json`.
pub fn cmd_evaluate(config: &Path, samples: &Path, overrides: &Overrides, out: &Path) -> Result<()> {
    let cfg = load(config, overrides)?;
    std::fs::create_dir_all(out)?;
    let s = read_samples_csv(samples)?;
    let built = cfg.target.build(cfg.approx.seed)?;
    let target = built.model.target();
    if s.ncols() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: target.dim(),
            got: s.ncols(),
        });
    }
    let mut ev = Evaluation {
        n_samples: s.nrows(),
        ..Default::default()
    };
    if let Model::Mlp { target, test } = &built.model {
        let pm = predictive_metrics(&s, target, test)?;
        ev.mse = Some(pm.mse);
        ev.nll = Some(pm.nll);
    }
    let seed = cfg.approx.seed;
    let reference = match &cfg.reference {
        None => None,
        Some(ReferenceSpec::Exact { n }) => {
            let n = n.unwrap_or(W1_SUBSAMPLE);
            let a = exact_samples(target, n, seed)?.samples;
            let b = exact_samples(target, n, seed.wrapping_add(1))?.samples;
            ev.floor_w1 = Some(wasserstein1(&thin_rows(&a, W1_SUBSAMPLE), &thin_rows(&b, W1_SUBSAMPLE))?);
            Some(("exact".to_string(), a))
        }
        Some(ReferenceSpec::Rwm(m)) => {
            let r = rwm_samples(target, m)?;
            ev.warnings.extend(r.warning);
            Some(("rwm".to_string(), r.samples.samples))
        }
        Some(ReferenceSpec::Csv { path }) => Some((path.display().to_string(), read_samples_csv(path)?)),
    };
    if let Some((name, r)) = reference {
        if r.ncols() != s.ncols() {
            return Err(Error::DimensionMismatch {
                expected: s.ncols(),
                got: r.ncols(),
            });
        }
        let (a, b) = (thin_rows(&s, W1_SUBSAMPLE), thin_rows(&r, W1_SUBSAMPLE));
        ev.w1 = Some(wasserstein1(&a, &b)?);
        let m = a.nrows().min(b.nrows());
        let first = |x: &Matrix| x.column(0).iter().take(m).copied().collect::<Vec<f64>>();
        ev.w1_first_dim = Some(wasserstein1_1d(&first(&a), &first(&b))?);
        ev.reference = Some(name);
        ev.n_reference = Some(r.nrows());
    }
    write_json(&out.join("evaluation.json"), &ev)?;
    write_run(out, "evaluate", &cfg)
}

/// Writes `report.json`, `report.md` and `run.json` for one experiment.
pub fn cmd_reproduce(experiment: Experiment, opts: &ReproduceOptions, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let report = reproduce(experiment, opts)?;
    write_json(&out.join("report.json"), &report)?;
    std::fs::write(out.join("report.md"), report.to_markdown())?;
    write_run(out, &format!("reproduce {}", experiment.key()), opts)
}

/// Renders the samples over the target contours into an SVG file.
pub fn cmd_plot(config: &Path, samples: &Path, out: &Path) -> Result<()> {
    let cfg = ExperimentConfig::load(config)?;
    let built = cfg.target.build(cfg.approx.seed)?;
    let s = read_samples_csv(samples)?;
    let svg = render_svg(built.model.target(), &s)?;
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(out, svg)?;
    Ok(())
}
