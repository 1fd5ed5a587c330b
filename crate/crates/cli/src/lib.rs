//! Command-line pipeline: generate data, train or select a classifier,
//! attribute a seeded test subset, evaluate the maps, benchmark runtime
//! scaling and write reports.

pub mod bench;
pub mod config;
pub mod error;
pub mod layout;
pub mod pipeline;
pub mod report;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use config::{Overrides, RunConfig, StageSeeds};
pub use error::{exit, CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "timereise", version, about = "Randomized-mask attribution for time-series classifiers")]
pub struct Cli {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(flatten)]
    pub flags: Flags,

    #[command(subcommand)]
    pub command: Command,
}

/// Overrides shared by every subcommand. Flags win over the configuration file.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Comma-separated method names; an empty value selects none.
    #[arg(long, global = true, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,
    #[arg(long, global = true)]
    pub subset_size: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub subset_pool: Option<PoolArg>,
    /// `oracle` or `linear_softmax`.
    #[arg(long, global = true)]
    pub classifier: Option<String>,
    #[arg(long, global = true)]
    pub n_train: Option<usize>,
    #[arg(long, global = true)]
    pub n_test: Option<usize>,
    #[arg(long, global = true)]
    pub anomaly_rate: Option<f64>,
    #[arg(long, global = true)]
    pub num_steps: Option<usize>,
    #[arg(long, global = true)]
    pub infidelity_perturbations: Option<usize>,
    #[arg(long, global = true)]
    pub sensitivity_perturbations: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PoolArg {
    All,
    Anomalous,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate or import the train and test splits.
    Generate,
    /// Train the linear classifier or store the oracle parameters.
    Train,
    /// Attribute the seeded test subset with every configured method.
    Attribute,
    /// Compute all metrics for the stored maps.
    Evaluate,
    /// Measure runtime and forward passes over the mask-count grid.
    Bench,
    /// Write a markdown report, merging several runs for average ranks.
    Report {
        /// Run directories to merge; defaults to the output directory.
        #[arg(long, num_args = 1..)]
        runs: Vec<PathBuf>,
    },
    /// generate, train, attribute and evaluate in sequence.
    Run,
}

impl Flags {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            out_dir: self.out_dir.clone(),
            methods: self.methods.clone(),
            subset_size: self.subset_size,
            subset_pool: self.subset_pool.map(|p| match p {
                PoolArg::All => config::SubsetPool::All,
                PoolArg::Anomalous => config::SubsetPool::Anomalous,
            }),
            classifier: self.classifier.clone(),
            n_train: self.n_train,
            n_test: self.n_test,
            anomaly_rate: self.anomaly_rate,
            num_steps: self.num_steps,
            infidelity_perturbations: self.infidelity_perturbations,
            sensitivity_perturbations: self.sensitivity_perturbations,
        }
    }
}

/// Loads the configuration file, if any, and applies the flags.
pub fn resolve_config(path: Option<&std::path::Path>, flags: &Flags) -> CliResult<RunConfig> {
    let mut cfg = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply(&flags.overrides())?;
    Ok(cfg)
}

pub fn execute(cli: &Cli) -> CliResult<()> {
    let cfg = resolve_config(cli.config.as_deref(), &cli.flags)?;
    match &cli.command {
        Command::Generate => pipeline::cmd_generate(&cfg),
        Command::Train => pipeline::cmd_train(&cfg).map(drop),
        Command::Attribute => pipeline::cmd_attribute(&cfg).map(drop),
        Command::Evaluate => pipeline::cmd_evaluate(&cfg).map(drop),
        Command::Bench => bench::cmd_bench(&cfg).map(drop),
        Command::Report { runs } => {
            let runs = if runs.is_empty() {
                vec![cfg.out_dir.clone()]
            } else {
                runs.clone()
            };
            report::cmd_report(&runs, &cfg.out_dir, cfg.metrics.alpha).map(drop)
        }
        Command::Run => pipeline::cmd_run(&cfg).map(drop),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::CONFIG } else { exit::SUCCESS };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => exit::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
