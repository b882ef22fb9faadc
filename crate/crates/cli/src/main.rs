//! `dsaae`: train, sample, and evaluate prior-matching autoencoders.
//!
//! Configuration is resolved in layers: built-in defaults, then the
//! `--config` file, then `DSAAE_*` environment variables, then repeated
//! `--set key=value` overrides, then the dedicated flags. `--seed` means the
//! master training seed for `train`, the sampling seed for `sample`, and the
//! center-drawing seed for `eval-parzen`.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dsaae_core::config::{parse_config_file, parse_set_arg};
use dsaae_core::{Error, Result, RunConfig};

#[derive(Parser)]
#[command(name = "dsaae", version, about = "Autoencoders with kernel-matched latent priors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Config file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Override one config key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Seed override; its meaning depends on the subcommand.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write metrics plus checkpoints.
    Train {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Decode fresh prior draws from a checkpoint.
    Sample {
        #[arg(long)]
        checkpoint: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Parzen-window log-likelihood of generated samples on the test set.
    EvalParzen {
        #[arg(long)]
        checkpoint: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Encode the hold-out set and dump the latent coordinates.
    DumpLatent {
        #[arg(long)]
        checkpoint: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
}

/// How the `--seed` flag is interpreted.
enum SeedRole {
    Master,
    SampleSeed,
    EvalSeed,
    Unused,
}

fn resolve_config(common: &CommonArgs, role: SeedRole) -> Result<RunConfig> {
    let file_pairs = match &common.config {
        Some(path) => parse_config_file(path)?,
        None => Vec::new(),
    };
    let mut set_pairs = Vec::with_capacity(common.set.len());
    for s in &common.set {
        set_pairs.push(parse_set_arg(s)?);
    }
    match (&role, common.seed) {
        (SeedRole::SampleSeed, Some(seed)) => {
            set_pairs.push(("sample.seed".to_string(), seed.to_string()));
        }
        (SeedRole::EvalSeed, Some(seed)) => {
            set_pairs.push(("eval.sample_seed".to_string(), seed.to_string()));
        }
        _ => {}
    }
    let master = match role {
        SeedRole::Master => common.seed,
        _ => None,
    };
    RunConfig::resolve(
        &file_pairs,
        |name| std::env::var(name).ok(),
        &set_pairs,
        common.out.clone(),
        master,
    )
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Train { common } => {
            let cfg = resolve_config(&common, SeedRole::Master)?;
            commands::cmd_train(&cfg)
        }
        Command::Sample { checkpoint, common } => {
            let cfg = resolve_config(&common, SeedRole::SampleSeed)?;
            commands::cmd_sample(&cfg, &checkpoint)
        }
        Command::EvalParzen { checkpoint, common } => {
            let cfg = resolve_config(&common, SeedRole::EvalSeed)?;
            commands::cmd_eval_parzen(&cfg, &checkpoint)
        }
        Command::DumpLatent { checkpoint, common } => {
            let cfg = resolve_config(&common, SeedRole::Unused)?;
            commands::cmd_dump_latent(&cfg, &checkpoint)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Validation(_) | Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
