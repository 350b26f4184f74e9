//! `hokdv`: experiment driver. Exit codes: 0 pass, 1 verdict failure,
//! 2 usage or configuration error.

mod commands;
mod config;
mod error;
mod run;

use clap::{Args, Parser, Subcommand};
use config::{resolve, Sources};
use error::CliError;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "hokdv", version, about = "Spectral experiments for periodic higher-order KdV")]
struct Cli {
    /// Worker threads for the parallel kernels (default: all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Parent directory for run directories
    #[arg(long, global = true, default_value = "runs")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat TOML config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set dt=5e-4` (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

macro_rules! flags {
    ($name:ident { $($field:ident),* $(,)? }) => {
        #[derive(Args)]
        struct $name {
            #[command(flatten)]
            common: Common,
            $(
                #[arg(long, allow_hyphen_values = true)]
                $field: Option<String>,
            )*
        }

        impl $name {
            fn sources(&self) -> Sources<'_> {
                Sources {
                    file: self.common.config.as_deref(),
                    sets: &self.common.sets,
                    flags: vec![$((stringify!($field), self.$field.as_ref())),*],
                }
            }
        }
    };
}

flags!(SimulateArgs { j, lambda, modes, dt, final_time, scheme, family, amplitude, seed });
flags!(SweepArgs { j, lambda, s, n, t });
flags!(AuditArgs { j, kmax });
flags!(EstimateArgs { lemma, j, lambda, s, a, b, l1, l2, trials, k_trend, generator, seed });
flags!(ContractionArgs { j, s, amplitude, max_iter });
flags!(PicardArgs { j, n, t, steps });

#[derive(Subcommand)]
enum Command {
    /// Integrate the equation and record conservation drift
    Simulate(SimulateArgs),
    /// Growth of the third Picard iterate on the φ_N family
    IllposedSweep(SweepArgs),
    /// Exhaustive two-wave resonance lower-bound audit
    ResonanceAudit(AuditArgs),
    /// Random search for the constants of the bilinear and embedding estimates
    EstimateSearch(EstimateArgs),
    /// Picard contraction in the discrete Z^s norm
    Contraction(ContractionArgs),
    /// Closed-form second iterate against Duhamel quadrature
    PicardCheck(PicardArgs),
}

fn dispatch(cli: &Cli) -> Result<i32, CliError> {
    let root = &cli.out;
    match &cli.command {
        Command::Simulate(a) => commands::simulate(root, resolve(a.sources())?.0),
        Command::IllposedSweep(a) => commands::illposed_sweep(root, resolve(a.sources())?.0),
        Command::ResonanceAudit(a) => commands::resonance_audit(root, resolve(a.sources())?.0),
        Command::EstimateSearch(a) => commands::estimate_search(root, resolve(a.sources())?.0),
        Command::Contraction(a) => commands::contraction(root, resolve(a.sources())?.0),
        Command::PicardCheck(a) => commands::picard_check(root, resolve(a.sources())?.0),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if n == 0 {
            eprintln!("usage error: --jobs must be at least 1");
            std::process::exit(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("cannot size the worker pool: {e}");
            std::process::exit(1);
        }
    }
    let code = match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
