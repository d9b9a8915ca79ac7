//! `erlmix`: simulate survival data, fit Erlang mixture models and write
//! plot-ready tables.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::SummarizeOverrides;
use crate::config::{FileConfig, Overrides, RunConfig};
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "erlmix", version, about = "Bayesian nonparametric survival analysis with Erlang mixtures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a synthetic dataset and write it with the generating curves.
    Simulate(CommonArgs),
    /// Run the sampler and write traces, summaries and diagnostics.
    Fit(CommonArgs),
    /// Draw prior realizations of the weights and density.
    PriorSim(PriorArgs),
    /// Recompute summaries from the draws stored by `fit`.
    Summarize(SummarizeArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON configuration file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named setting: example1, example2, example3, liver or lung.
    #[arg(long)]
    preset: Option<String>,
    /// Target censoring fraction (example2).
    #[arg(long)]
    censoring: Option<f64>,
    /// CSV data file with columns time,status[,group].
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    iterations: Option<usize>,
    /// Burn-in as a fraction of the iterations.
    #[arg(long)]
    burn_in: Option<f64>,
    #[arg(long)]
    thin: Option<usize>,
    #[arg(long)]
    grid_max: Option<f64>,
    #[arg(long)]
    grid_points: Option<usize>,
    /// Credible level of the bands.
    #[arg(long)]
    level: Option<f64>,
    /// Number of independent chains run in parallel.
    #[arg(long)]
    chains: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PriorArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Study: alpha (varying total mass) or basis (varying M and θ).
    #[arg(long)]
    study: Option<String>,
    /// Realizations per setting.
    #[arg(long)]
    realizations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    grid_max: Option<f64>,
    #[arg(long)]
    grid_points: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SummarizeArgs {
    /// Output directory of a previous `fit`.
    #[arg(long)]
    from: PathBuf,
    /// Seed for the weight draws; defaults to the seed of the fit.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    grid_max: Option<f64>,
    #[arg(long)]
    grid_points: Option<usize>,
    #[arg(long)]
    level: Option<f64>,
    /// Defaults to `<from>/summary`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn file_config(path: &Option<PathBuf>) -> Result<FileConfig, CliError> {
    path.as_deref().map_or(Ok(FileConfig::default()), FileConfig::load)
}

fn resolve(a: CommonArgs) -> Result<RunConfig, CliError> {
    let file = file_config(&a.config)?;
    RunConfig::resolve(
        file,
        Overrides {
            preset: a.preset,
            censoring: a.censoring,
            data: a.data,
            seed: a.seed,
            iterations: a.iterations,
            burn_in: a.burn_in,
            thin: a.thin,
            grid_max: a.grid_max,
            grid_points: a.grid_points,
            level: a.level,
            chains: a.chains,
            out: a.out,
            ..Default::default()
        },
    )
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(a) => commands::simulate(&resolve(a)?),
        Command::Fit(a) => commands::fit(&resolve(a)?),
        Command::PriorSim(a) => {
            let file = file_config(&a.config)?;
            let cfg = RunConfig::resolve(
                file,
                Overrides {
                    seed: a.seed,
                    grid_max: a.grid_max,
                    grid_points: a.grid_points,
                    out: a.out,
                    prior_study: a.study,
                    realizations: a.realizations,
                    ..Default::default()
                },
            )?;
            commands::prior_sim(&cfg)
        }
        Command::Summarize(a) => commands::summarize(
            &a.from,
            SummarizeOverrides {
                seed: a.seed,
                grid_max: a.grid_max,
                grid_points: a.grid_points,
                level: a.level,
                out: a.out,
            },
        ),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("erlmix: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
