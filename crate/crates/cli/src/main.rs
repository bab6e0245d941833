use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;

use commands::Failure;
use config::RunConfig;

#[derive(Parser)]
#[command(name = "rete", version, about = "Temporal event forecasting over evolving knowledge graphs")]
struct Cli {
    /// Run configuration file of `key = value` lines.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set dim=16`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse logs and the product graph into registries and snapshots.
    Ingest,
    /// Sample per-user subgraphs for every non-background step.
    Sample,
    /// Pretrain on the background steps, then train the ranking model.
    Train,
    /// Score a trained model on the validation or test window.
    Eval {
        /// frozen or autoregressive; defaults to `eval.mode`.
        #[arg(long)]
        mode: Option<String>,
        /// val or test; defaults to `eval.window`.
        #[arg(long)]
        window: Option<String>,
        /// Also write per-user scores as CSV.
        #[arg(long)]
        per_user: bool,
    },
    /// Write the temporal attention weights of one user as CSV.
    ExportAttention {
        #[arg(long)]
        user: String,
        /// Trajectory end (exclusive global step); defaults to the last step.
        #[arg(long)]
        until: Option<usize>,
    },
    /// Run the built-in oracle suites.
    Selftest,
    /// Write a planted-preference synthetic dataset.
    Synth {
        #[arg(long)]
        out: PathBuf,
        /// Let preferences wander and flip inside the test window.
        #[arg(long)]
        drift: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the effective configuration in canonical form.
    ShowConfig,
}

fn load_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::new("io", format!("{}: {e}", path.display())))?;
        cfg.apply_text(&text, path)?;
    }
    for kv in &cli.overrides {
        cfg.apply_override(kv)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Command::Synth { out, drift, seed } = &cli.command {
        return commands::synth(out, *drift, *seed);
    }
    let cfg = load_config(&cli)?;
    match cli.command {
        Command::Ingest => commands::ingest(&cfg),
        Command::Sample => commands::sample(&cfg),
        Command::Train => commands::train(&cfg),
        Command::Eval { mode, window, per_user } => {
            let mut cfg = cfg;
            if let Some(m) = mode {
                cfg.set("eval.mode", &m)?;
            }
            if let Some(w) = window {
                cfg.set("eval.window", &w)?;
            }
            commands::eval(&cfg, per_user)
        }
        Command::ExportAttention { user, until } => commands::export_attention(&cfg, &user, until),
        Command::Selftest => commands::selftest(&cfg),
        Command::ShowConfig => {
            print!("{}", cfg.canonical());
            Ok(())
        }
        Command::Synth { .. } => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("ERROR usage: {first}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("ERROR {}: {}", f.code, f.message);
            ExitCode::FAILURE
        }
    }
}
