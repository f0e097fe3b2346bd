use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spde_core::experiment::{preset, presets, run_experiment, ExperimentConfig};
use spde_core::Error;

#[derive(Parser)]
#[command(name = "spde", version, about = "Run ergodic-statistics experiments for the stochastic heat equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write <name>.json, <name>.csv and <name>.dat.
    Run {
        config: PathBuf,
        /// Output directory (overrides the config; default `results`).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a config without running it.
    Validate { config: PathBuf },
    /// List the reference presets, or print one as JSON.
    Presets {
        /// Preset id or name.
        name: Option<String>,
        /// Write every preset to DIR/<name>.json.
        #[arg(long)]
        write: Option<PathBuf>,
    },
}

const EXIT_THRESHOLD: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_DIVERGENCE: u8 = 3;

fn fail(err: &Error) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(match err {
        Error::Divergence { .. } => EXIT_DIVERGENCE,
        _ => EXIT_INVALID,
    })
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { config, out, workers, seed } => {
            let mut config = match ExperimentConfig::load(&config) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            if let Some(seed) = seed {
                config.master_seed = seed;
            }
            let dir = out.or_else(|| config.output.clone()).unwrap_or_else(|| PathBuf::from("results"));
            let result = match run_experiment(&config, workers) {
                Ok(r) => r,
                Err(e) => return fail(&e),
            };
            for check in &result.checks {
                let bounds = format!(
                    "[{}, {}]",
                    check.lower.map_or("-inf".into(), |l| l.to_string()),
                    check.upper.map_or("inf".into(), |u| u.to_string())
                );
                let verdict = if check.passed { "PASS" } else { "FAIL" };
                println!("{verdict} {}: {} in {bounds}", check.name, check.value);
            }
            match result.write(&dir) {
                Ok(files) => files.iter().for_each(|f| println!("wrote {}", f.display())),
                Err(e) => return fail(&e),
            }
            println!("{:.2}s on {} workers", result.provenance.wall_clock_seconds, result.provenance.workers);
            if result.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_THRESHOLD)
            }
        }
        Command::Validate { config } => match ExperimentConfig::load(&config) {
            Ok(c) => {
                println!("ok: {} ({})", c.name, c.experiment.kind_name());
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e),
        },
        Command::Presets { name: Some(name), .. } => match preset(&name) {
            Some(p) => {
                println!("{}", p.config.to_json());
                ExitCode::SUCCESS
            }
            None => {
                eprintln!("error: no preset {name:?}");
                ExitCode::from(EXIT_INVALID)
            }
        },
        Command::Presets { name: None, write } => {
            for p in presets() {
                println!("{:>2}  {:<18} {}", p.id, p.name, p.summary);
                if let Some(dir) = &write {
                    let written = std::fs::create_dir_all(dir)
                        .and_then(|_| std::fs::write(dir.join(format!("{}.json", p.name)), p.config.to_json() + "\n"));
                    if let Err(e) = written {
                        return fail(&e.into());
                    }
                }
            }
            ExitCode::SUCCESS
        }
    }
}
