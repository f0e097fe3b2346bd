use crate::drift::DriftSpec;
use crate::estimator::{BurnIn, Observable, Outer, LONG_RUN_BATCHES};
use crate::model::ModelSpec;
use crate::noise::NoiseSpec;
use crate::spectral::SpectralField;

use super::config::{Experiment, ExperimentConfig, SCHEMA_VERSION};

/// A named, ready-to-run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub id: u32,
    pub name: &'static str,
    pub summary: &'static str,
    pub config: ExperimentConfig,
}

const SEED: u64 = 20_240_611;

fn ou(kappa: f64, beta: f64) -> ModelSpec {
    ModelSpec::new(DriftSpec::zero(), NoiseSpec::power_law(kappa, beta).expect("admissible preset noise"))
        .expect("valid preset model")
}

fn config(name: &str, model: ModelSpec, experiment: Experiment) -> ExperimentConfig {
    ExperimentConfig {
        schema_version: SCHEMA_VERSION,
        name: name.to_string(),
        model,
        experiment,
        master_seed: SEED,
        workers: None,
        output: None,
    }
}

fn dyadic_taus() -> Vec<f64> {
    (4..=9).map(|k| 2f64.powi(-k)).collect()
}

/// The reference experiments, numbered 1 to 8.
pub fn presets() -> Vec<Preset> {
    let e1 = Observable::mode(1, 1).expect("e1");
    vec![
        Preset {
            id: 1,
            name: "temporal-smooth",
            summary: "temporal strong order, Q = (-A)^-1, beta = 1",
            config: config(
                "temporal-smooth",
                ou(-1.0, 1.0),
                Experiment::TemporalOrder {
                    taus: dyadic_taus(),
                    dim: 32,
                    horizon: 1.0,
                    replicas: 64,
                    refinement: 16,
                    x0: None,
                    slope_band: Some([0.35, 0.65]),
                },
            ),
        },
        Preset {
            id: 2,
            name: "temporal-rough",
            summary: "temporal strong order, Q = I, beta = 0.45",
            config: config(
                "temporal-rough",
                ou(0.0, 0.45),
                Experiment::TemporalOrder {
                    taus: dyadic_taus(),
                    dim: 32,
                    horizon: 1.0,
                    replicas: 64,
                    refinement: 16,
                    x0: None,
                    slope_band: Some([0.10, 0.40]),
                },
            ),
        },
        Preset {
            id: 3,
            name: "spatial",
            summary: "spatial strong order against N_ref = 128",
            config: config(
                "spatial",
                ou(-1.0, 1.0),
                Experiment::SpatialOrder {
                    dims: vec![2, 4, 8, 16],
                    dim_ref: 128,
                    tau: 1e-3,
                    horizon: 1.0,
                    replicas: 64,
                    x0: None,
                    slope_band: Some([-1.3, -0.7]),
                },
            ),
        },
        Preset {
            id: 4,
            name: "invariant-measure",
            summary: "stationary second moment of mode 1 from a 10^6-step run",
            config: config(
                "invariant-measure",
                ou(-1.0, 1.0),
                Experiment::InvariantMeasure {
                    tau: 0.05,
                    dim: 4,
                    steps: 1_000_000,
                    mode: 1,
                    burn_in: BurnIn::Auto,
                    batch_len: None,
                    stderr_multiplier: 3.0,
                    bias_envelope: 2.0,
                },
            ),
        },
        Preset {
            id: 5,
            name: "lln",
            summary: "weak law of large numbers for <e1, x> under the coupling",
            config: config(
                "lln",
                ou(-1.0, 1.0),
                Experiment::Lln {
                    taus: vec![0.04, 0.02, 0.01],
                    alpha: 0.4,
                    allow_alpha_override: false,
                    replicas: 200,
                    burn_in: BurnIn::Auto,
                    observable: Some(e1.clone()),
                    allowed_inversions: 1,
                },
            ),
        },
        Preset {
            id: 6,
            name: "clt-linear",
            summary: "CLT for <e1, x> against the Poisson variance pi^-6",
            config: config(
                "clt-linear",
                ou(-1.0, 1.0),
                Experiment::Clt {
                    tau: 0.02,
                    alpha: 0.4,
                    allow_alpha_override: false,
                    replicas: 400,
                    burn_in: BurnIn::Auto,
                    observable: Some(e1.clone()),
                    reference_batches: LONG_RUN_BATCHES,
                    variance_band: Some([0.6, 1.5]),
                    mean_sigmas: 4.0,
                    ks_critical: 1.63,
                    ks_allowance: 0.04,
                },
            ),
        },
        Preset {
            id: 7,
            name: "clt-bounded",
            summary: "CLT for sin(2 <e1, x>) against a batch-means variance",
            config: config(
                "clt-bounded",
                ou(-1.0, 1.0),
                Experiment::Clt {
                    tau: 0.02,
                    alpha: 0.4,
                    allow_alpha_override: false,
                    replicas: 400,
                    burn_in: BurnIn::Auto,
                    observable: Some(
                        Observable::composed(Outer::Sin, 1.0, 2.0, SpectralField::basis(1, 1).expect("e1"))
                            .expect("bounded observable"),
                    ),
                    reference_batches: LONG_RUN_BATCHES,
                    variance_band: Some([0.5, 2.0]),
                    mean_sigmas: 4.0,
                    ks_critical: 1.63,
                    ks_allowance: 0.04,
                },
            ),
        },
        Preset {
            id: 8,
            name: "decomposition",
            summary: "martingale part and remainder of the CLT deviation",
            config: config(
                "decomposition",
                ou(-1.0, 1.0),
                Experiment::Decomposition {
                    taus: vec![0.02, 0.005],
                    alpha: 0.4,
                    allow_alpha_override: false,
                    replicas: 400,
                    burn_in: BurnIn::Auto,
                    observable: Some(e1),
                    band_level: 0.99,
                },
            ),
        },
    ]
}

/// Looks a preset up by id (`"6"`) or name (`"clt-linear"`).
pub fn preset(key: &str) -> Option<Preset> {
    presets().into_iter().find(|p| p.name == key || p.id.to_string() == key)
}
