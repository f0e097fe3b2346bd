//! Config-driven experiments: JSON in, JSON/CSV/`.dat` out.
//!
//! ```no_run
//! use spde_core::experiment::{preset, run_experiment};
//!
//! let config = preset("clt-linear").unwrap().config;
//! let result = run_experiment(&config, Some(4)).unwrap();
//! result.write("out").unwrap();
//! println!("passed: {}", result.passed);
//! ```

mod config;
mod output;
mod presets;
mod run;

pub use config::{first_mode, Experiment, ExperimentConfig, SCHEMA_VERSION};
pub use output::{
    Cell, Check, CltSummary, DecompositionPoint, ExperimentResult, InvariantRecord, OrderPoint, Payload, Provenance,
    Table,
};
pub use presets::{preset, presets, Preset};
pub use run::run_experiment;
