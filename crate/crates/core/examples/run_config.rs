//! The experiment layer: parse a JSON config (or take a preset), run it on
//! a worker pool, inspect the checks and write JSON/CSV/.dat files.
//!
//! ```text
//! cargo run --release --example run_config [-- config.json]
//! ```

use spde_core::experiment::{preset, run_experiment, ExperimentConfig};

fn main() -> spde_core::Result<()> {
    let config = match std::env::args().nth(1) {
        Some(path) => ExperimentConfig::load(path)?,
        None => preset("clt-linear").expect("built-in preset").config,
    };
    println!("{}", config.to_json());
    let result = run_experiment(&config, Some(4))?;
    for check in &result.checks {
        println!("{} {}: {}", if check.passed { "PASS" } else { "FAIL" }, check.name, check.value);
    }
    let dir = std::env::temp_dir().join("spde-example");
    for file in result.write(&dir)? {
        println!("wrote {}", file.display());
    }
    Ok(())
}
