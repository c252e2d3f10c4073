mod commands;
mod config;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use commands::Outcome;
use config::{CommandName, EstimatorKind, RunConfig};

#[derive(Parser)]
#[command(
    name = "ridgenet",
    version,
    about = "Ridge-fitted sigmoid network regression"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit an estimator to a CSV data set and write the model.
    Fit(Common),
    /// Predict with a saved model.
    Predict(Common),
    /// Run the simulation benchmark.
    Bench(Common),
    /// Run the convergence-rate experiment.
    Rate(Common),
    /// Check the building blocks against their error bounds.
    ApproxCheck(Common),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for all parallel work.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    quick: bool,
    #[arg(long, value_enum)]
    estimator: Option<EstimatorKind>,
}

fn resolve(name: CommandName, c: Common) -> Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.command = Some(name);
    if c.input.is_some() {
        cfg.input = c.input;
    }
    if c.model.is_some() {
        cfg.model = c.model;
    }
    if c.output.is_some() {
        cfg.output = c.output;
    }
    if c.seed.is_some() {
        cfg.seed = c.seed;
    }
    if c.workers.is_some() {
        cfg.workers = c.workers;
    }
    if let Some(e) = c.estimator {
        cfg.estimator = e;
    }
    cfg.quick |= c.quick;
    cfg.validate()?;
    Ok(cfg)
}

fn run(cfg: &RunConfig) -> Result<Outcome> {
    log::debug!("resolved config: {}", cfg.to_json_line());
    match cfg.command.context("no command")? {
        CommandName::Fit => commands::fit(cfg),
        CommandName::Predict => commands::predict(cfg),
        CommandName::Bench => commands::bench(cfg),
        CommandName::Rate => commands::rate(cfg),
        CommandName::ApproxCheck => commands::approx_check(cfg),
    }
}

fn main() -> Result<ExitCode> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (name, common) = match cli.command {
        Command::Fit(c) => (CommandName::Fit, c),
        Command::Predict(c) => (CommandName::Predict, c),
        Command::Bench(c) => (CommandName::Bench, c),
        Command::Rate(c) => (CommandName::Rate, c),
        Command::ApproxCheck(c) => (CommandName::ApproxCheck, c),
    };
    let cfg = resolve(name, common)?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.workers {
        pool = pool.num_threads(w);
    }
    let pool = pool.build().context("starting worker pool")?;
    match pool.install(|| run(&cfg))? {
        Outcome::Success => Ok(ExitCode::SUCCESS),
        Outcome::Failed(why) => {
            eprintln!("error: {why}");
            Ok(ExitCode::from(2))
        }
    }
}
