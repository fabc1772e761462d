use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qga_cli::commands::{
    cmd_fit, cmd_reproduce, cmd_run, cmd_sweep, reproduce_defaults, ExitStatus, Figure,
};
use qga_cli::config::{ExperimentConfig, Overrides};
use qga_cli::error::Result;

#[derive(Parser)]
#[command(
    name = "qga",
    version,
    about = "Genetic search for quantum circuit unitaries"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single GA run with seed `--base-seed`.
    Run(ConfigArgs),
    /// Ensemble of `--seeds` runs.
    Sweep(ConfigArgs),
    /// Fit `Q = a exp(-b eps) + c` to points or per-run results.
    Fit {
        /// CSV with `epsilon,q_c` columns, or a `runs.csv` / `qc_eps.csv`.
        input: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Quantile bins for per-run input.
        #[arg(long, default_value_t = 20)]
        bins: usize,
    },
    /// Regenerate the data behind a figure (fig5, fig6, fig7).
    Reproduce {
        figure: String,
        #[command(flatten)]
        config: ConfigArgs,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// Flat TOML configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in task (`deutsch`, `deutsch-all`) or task file.
    #[arg(long)]
    task: Option<String>,
    #[arg(long)]
    npop: Option<usize>,
    /// Bits per chromosome.
    #[arg(long)]
    depth: Option<u32>,
    /// Parameter half-range in radians.
    #[arg(long)]
    half_range: Option<f64>,
    /// Stop once the best error is below this value.
    #[arg(long)]
    threshold: Option<f64>,
    /// Per-bit mutation probability.
    #[arg(long)]
    mutation: Option<f64>,
    #[arg(long)]
    elitism: Option<usize>,
    #[arg(long)]
    max_gen: Option<usize>,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    base_seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    horizon: Option<usize>,
}

impl ConfigArgs {
    fn resolve(self, defaults: ExperimentConfig) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => defaults,
        };
        Overrides {
            task: self.task,
            npop: self.npop,
            depth: self.depth,
            half_range: self.half_range,
            threshold: self.threshold,
            mutation: self.mutation,
            elitism: self.elitism,
            max_gen: self.max_gen,
            seeds: self.seeds,
            base_seed: self.base_seed,
            out: self.out,
            workers: self.workers,
            bins: self.bins,
            horizon: self.horizon,
        }
        .apply(&mut cfg);
        Ok(cfg)
    }
}

fn dispatch(cli: Cli) -> Result<ExitStatus> {
    match cli.command {
        Command::Run(args) => cmd_run(&args.resolve(ExperimentConfig::default())?),
        Command::Sweep(args) => cmd_sweep(&args.resolve(ExperimentConfig::default())?),
        Command::Fit { input, out, bins } => cmd_fit(&input, &out, bins),
        Command::Reproduce { figure, config } => {
            let figure: Figure = figure.parse()?;
            cmd_reproduce(&config.resolve(reproduce_defaults())?, figure)
        }
    }
}

fn main() -> ExitCode {
    let status = dispatch(Cli::parse()).unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitStatus::Failure
    });
    ExitCode::from(status.code() as u8)
}
