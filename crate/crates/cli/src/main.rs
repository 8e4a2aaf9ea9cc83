mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use stochpack::engine::Momentum;

#[derive(Parser)]
#[command(name = "stochpack", version, about = "Online stochastic packing: instance generation, policy runs and oracle checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write an instance file from a generator config.
    Gen {
        #[arg(long)]
        config: PathBuf,
        /// Override the generator seed (nrm, random_tree).
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the theory parameters (α, K, η₁, η₂) as CSV.
    Params {
        #[arg(long, value_enum)]
        momentum: Option<Mode>,
        #[arg(long)]
        epsilon: f64,
        #[arg(long = "L", default_value_t = 1)]
        l: usize,
        #[arg(long, default_value_t = 1.0)]
        iota: f64,
        #[arg(long = "T", default_value_t = 1)]
        horizon: usize,
        /// Defaults to T.
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long = "U", default_value_t = 1)]
        u: usize,
        #[arg(long = "W", default_value_t = 1)]
        w: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate policies by Monte Carlo; one CSV row per replicate group.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// JSON-lines trace of the first episode of each group.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Compare policies against the exact oracles on explicit instances.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Unaccelerated,
    Accelerated,
}

/// How a command failed; decides the exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad config, instance or IO.
    Config(anyhow::Error),
    /// A solver or internal error.
    Runtime(anyhow::Error),
    Gap(String),
    Audit(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        use stochpack::Error as E;
        let kind = e.chain().find_map(|c| c.downcast_ref::<E>());
        match kind {
            Some(E::Audit { .. }) => Failure::Audit(format!("{e:#}")),
            Some(
                E::NonConvergence(_)
                | E::Internal(_)
                | E::Cap { .. }
                | E::Lp(_)
                | E::Sequencing { .. }
                | E::Contract(_)
                | E::Support(_)
                | E::MissingValue(_),
            ) => Failure::Runtime(e),
            _ => Failure::Config(e),
        }
    }
}

impl From<stochpack::Error> for Failure {
    fn from(e: stochpack::Error) -> Self {
        anyhow::Error::from(e).into()
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result: Result<(), Failure> = match cli.command {
        Command::Gen { config, seed, out } => commands::gen(&config, seed, out.as_deref()).map_err(Failure::from),
        Command::Params { momentum, epsilon, l, iota, horizon, theta, u, w, out } => {
            let momentum = momentum.map(|m| match m {
                Mode::Unaccelerated => Momentum::Unaccelerated,
                Mode::Accelerated => Momentum::Accelerated,
            });
            commands::params(momentum, epsilon, l, iota, horizon, theta, u, w, out.as_deref()).map_err(Failure::from)
        }
        Command::Run { config, seed, episodes, out, trace } => {
            commands::run(&config, seed, episodes, out.as_deref(), trace.as_deref())
        }
        Command::Verify { config, seed, episodes, out, trace } => {
            commands::verify(&config, seed, episodes, out.as_deref(), trace.as_deref())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Gap(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(3)
        }
        Err(Failure::Audit(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(4)
        }
    }
}
