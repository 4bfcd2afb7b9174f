use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use riemlap_cli::commands::{cmd_evaluate, cmd_map, cmd_plot, cmd_reproduce, cmd_sample, Overrides};
use riemlap_core::experiments::{Experiment, ReproduceOptions};
use riemlap_core::laplace::{MapKind, PrecisionKind, Variant};
use riemlap_core::{Error, Result};

#[derive(Parser)]
#[command(name = "riemlap", version, about = "Riemannian Laplace approximation sampler and experiments")]
struct Cli {
    /// Worker threads (default: available cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// ela, rla_b, rla_blog or rla_f.
    #[arg(long)]
    variant: Option<Variant>,
    /// euclidean or hausdorff.
    #[arg(long)]
    map_kind: Option<MapKind>,
    /// neg_hessian or fisher.
    #[arg(long)]
    precision: Option<PrecisionKind>,
    #[arg(long)]
    n_samples: Option<usize>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            variant: self.variant,
            map_kind: self.map_kind,
            precision: self.precision,
            n_samples: self.n_samples,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Draw samples from one approximation.
    Sample(Common),
    /// Find the MAP and precision only.
    Map(Common),
    /// Score a sample CSV against the configured reference.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Samples to score (CSV, no header).
        #[arg(long)]
        samples: PathBuf,
    },
    /// Run one of the benchmark experiments and write its report.
    Reproduce {
        /// banana, squiggle, funnel, logreg, bias or mlp.
        experiment: Experiment,
        #[arg(long)]
        out: PathBuf,
        /// Options as JSON; flags below override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        n_repeats: Option<usize>,
        #[arg(long)]
        n_samples: Option<usize>,
        /// Restrict to these methods (repeatable).
        #[arg(long)]
        variant: Vec<Variant>,
        /// Restrict logistic regression to these datasets (comma separated).
        #[arg(long, value_delimiter = ',')]
        datasets: Vec<String>,
        /// Use seeded stand-ins for datasets that are not on disk.
        #[arg(long)]
        synthetic_data: bool,
        /// Record wall time per run.
        #[arg(long)]
        timing: bool,
    },
    /// Plot 2D samples over the target's density contours.
    Plot {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        samples: PathBuf,
        /// Output SVG file.
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidConfig(format!("--threads: {e}")))?;
    }
    match cli.command {
        Command::Sample(c) => cmd_sample(&c.config, &c.overrides(), &c.out).map(|_| ()),
        Command::Map(c) => cmd_map(&c.config, &c.overrides(), &c.out),
        Command::Evaluate { common, samples } => cmd_evaluate(&common.config, &samples, &common.overrides(), &common.out),
        Command::Reproduce {
            experiment,
            out,
            config,
            seed,
            n_repeats,
            n_samples,
            variant,
            datasets,
            synthetic_data,
            timing,
        } => {
            let mut opts = match config {
                Some(p) => {
                    let text = std::fs::read_to_string(&p)
                        .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", p.display())))?;
                    let de = &mut serde_json::Deserializer::from_str(&text);
                    serde_path_to_error::deserialize::<_, ReproduceOptions>(de)
                        .map_err(|e| Error::InvalidConfig(format!("at `{}`: {}", e.path(), e.inner())))?
                }
                None => ReproduceOptions::default(),
            };
            if let Some(s) = seed {
                opts.seed = s;
            }
            if let Some(n) = n_repeats {
                opts.n_repeats = n;
            }
            if n_samples.is_some() {
                opts.n_samples = n_samples;
            }
            if !variant.is_empty() {
                opts.variants = Some(variant);
            }
            if !datasets.is_empty() {
                opts.datasets = Some(datasets);
            }
            opts.synthetic_data |= synthetic_data;
            opts.timing |= timing;
            cmd_reproduce(experiment, &opts, &out)
        }
        Command::Plot { config, samples, out } => cmd_plot(&config, &samples, &out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
