//! `hierss`: batch front end for component extraction, model fitting,
//! cross-validation and the simulation studies.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hierss::report::{ensure_dir, write_text};
use hierss::sampler::ModelVariant;
use hierss::{Error, Result};

use crate::commands::Outcome;
use crate::config::{RunConfig, THREADS_ENV};

#[derive(Parser, Debug)]
#[command(name = "hierss", version, about = "Hierarchical spike-and-slab survival regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Model variant for `fit`.
    #[arg(long, global = true)]
    variant: Option<ModelVariant>,

    /// Total Gibbs iterations.
    #[arg(long, global = true)]
    total: Option<usize>,

    #[arg(long, global = true)]
    burnin: Option<usize>,

    #[arg(long, global = true)]
    thin: Option<usize>,

    /// Worker threads (defaults to available parallelism).
    #[arg(long, global = true, env = THREADS_ENV)]
    threads: Option<usize>,

    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// SVD component scores from low-rank modules, assembled into a design.
    Extract,
    /// Fit one model variant and summarize its posterior.
    Fit,
    /// K-fold cross-validated log posterior predictive likelihood.
    Cv,
    /// Variant-comparison simulation study.
    Simulate,
    /// Coverage and selection-accuracy validation study.
    Validate,
    /// Summarize a stored posterior.
    Summarize,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Extract => "extract",
            Command::Fit => "fit",
            Command::Cv => "cv",
            Command::Simulate => "simulate",
            Command::Validate => "validate",
            Command::Summarize => "summarize",
        }
    }
}

/// Merges the config file with flag overrides.
fn effective_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = Some(seed);
    }
    if let Some(v) = cli.variant {
        cfg.variant = v;
    }
    if let Some(t) = cli.threads {
        cfg.threads = Some(t);
    }
    if let Some(out) = &cli.out {
        cfg.out = Some(out.clone());
    }
    // Schedule flags apply to whichever schedule the command runs.
    let schedule = match cli.command {
        Command::Simulate => &mut cfg.simulate.schedule,
        Command::Validate => &mut cfg.validate.study.schedule,
        _ => &mut cfg.schedule,
    };
    if let Some(t) = cli.total {
        schedule.total = t;
    }
    if let Some(b) = cli.burnin {
        schedule.burn_in = b;
    }
    if let Some(t) = cli.thin {
        schedule.thin = t;
    }
    schedule.validate()?;
    cfg.seed()?;
    cfg.make_paths_absolute()?;
    if cfg.threads == Some(0) {
        return Err(Error::Config("threads must be at least 1".into()));
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<Outcome> {
    let cfg = effective_config(cli)?;
    let out = cfg.out()?;
    ensure_dir(out)?;
    write_text(&out.join("config.toml"), &cfg.to_toml()?)?;

    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    let threads = cfg
        .threads
        .unwrap_or(available)
        .min(commands::task_grid(&cfg, cli.command.name()));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start thread pool: {e}")))?;
    log::info!("{} with {threads} thread(s)", cli.command.name());
    pool.install(|| match cli.command {
        Command::Extract => commands::extract(&cfg),
        Command::Fit => commands::fit(&cfg),
        Command::Cv => commands::cv(&cfg),
        Command::Simulate => commands::simulate(&cfg),
        Command::Validate => commands::validate(&cfg),
        Command::Summarize => commands::summarize(&cfg),
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Complete) => ExitCode::SUCCESS,
        Ok(Outcome::Partial(msg)) => {
            log::error!("{msg}");
            ExitCode::from(3)
        }
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(match e {
                Error::Config(_) => 2,
                _ => 1,
            })
        }
    }
}
