use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{BurnIn, CltConfig, Observable, ObservableKind, LONG_RUN_BATCHES};
use crate::integrator::{horizon_steps, SchemeParams};
use crate::model::ModelSpec;
use crate::spectral::SpectralField;

pub const SCHEMA_VERSION: u32 = 1;

/// A complete, self-describing experiment. Times are in the model's
/// dimensionless time units (the domain is `(0, 1)`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    /// Used as the stem of output files: `[A-Za-z0-9_-]+`.
    pub name: String,
    pub model: ModelSpec,
    pub experiment: Experiment,
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn refinement_default() -> usize {
    16
}
fn mode_default() -> usize {
    1
}
fn three() -> f64 {
    3.0
}
fn two() -> f64 {
    2.0
}
fn one() -> usize {
    1
}
fn four() -> f64 {
    4.0
}
fn ks_critical_default() -> f64 {
    1.63
}
fn ks_allowance_default() -> f64 {
    0.04
}
fn band_level_default() -> f64 {
    0.99
}
fn batches_default() -> usize {
    LONG_RUN_BATCHES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Experiment {
    /// Paired RMS error at `T = horizon` against step `tau / refinement`.
    TemporalOrder {
        taus: Vec<f64>,
        dim: usize,
        horizon: f64,
        replicas: usize,
        #[serde(default = "refinement_default")]
        refinement: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x0: Option<SpectralField>,
        /// Accepted range of the fitted slope; `β/2 ± 0.15` when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        slope_band: Option<[f64; 2]>,
    },
    /// Paired RMS error at `T = horizon` against dimension `dim_ref`.
    SpatialOrder {
        dims: Vec<usize>,
        dim_ref: usize,
        tau: f64,
        horizon: f64,
        replicas: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x0: Option<SpectralField>,
        /// Accepted range of the fitted slope; `−β ± 0.3` when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        slope_band: Option<[f64; 2]>,
    },
    /// Stationary second moment of one mode from a single long run.
    InvariantMeasure {
        tau: f64,
        dim: usize,
        steps: u64,
        #[serde(default = "mode_default")]
        mode: usize,
        #[serde(default)]
        burn_in: BurnIn,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        batch_len: Option<usize>,
        #[serde(default = "three")]
        stderr_multiplier: f64,
        /// The empirical moment must lie within `envelope · λτ · q/(2λ)` of
        /// the continuous value.
        #[serde(default = "two")]
        bias_envelope: f64,
    },
    /// `mean |Π − π(h)|` over replicas on a decreasing grid of steps.
    Lln {
        taus: Vec<f64>,
        alpha: f64,
        #[serde(default)]
        allow_alpha_override: bool,
        replicas: usize,
        #[serde(default)]
        burn_in: BurnIn,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        observable: Option<Observable>,
        #[serde(default = "one")]
        allowed_inversions: usize,
    },
    /// Distribution of `τ^{-β/2}(Π − π(h))` over replicas.
    Clt {
        tau: f64,
        alpha: f64,
        #[serde(default)]
        allow_alpha_override: bool,
        replicas: usize,
        #[serde(default)]
        burn_in: BurnIn,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        observable: Option<Observable>,
        #[serde(default = "batches_default")]
        reference_batches: usize,
        /// Accepted range of `s²/σ²`; `[0.6, 1.5]` for linear observables and
        /// `[0.5, 2.0]` otherwise when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        variance_band: Option<[f64; 2]>,
        #[serde(default = "four")]
        mean_sigmas: f64,
        /// KS threshold is `ks_critical/√R + ks_allowance`.
        #[serde(default = "ks_critical_default")]
        ks_critical: f64,
        #[serde(default = "ks_allowance_default")]
        ks_allowance: f64,
    },
    /// Martingale/remainder split of the deviation, per step size.
    Decomposition {
        taus: Vec<f64>,
        alpha: f64,
        #[serde(default)]
        allow_alpha_override: bool,
        replicas: usize,
        #[serde(default)]
        burn_in: BurnIn,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        observable: Option<Observable>,
        #[serde(default = "band_level_default")]
        band_level: f64,
    },
}

impl Experiment {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Experiment::TemporalOrder { .. } => "temporal_order",
            Experiment::SpatialOrder { .. } => "spatial_order",
            Experiment::InvariantMeasure { .. } => "invariant_measure",
            Experiment::Lln { .. } => "lln",
            Experiment::Clt { .. } => "clt",
            Experiment::Decomposition { .. } => "decomposition",
        }
    }
}

/// `⟨e₁, ·⟩`, the default observable.
pub fn first_mode() -> Observable {
    Observable::mode(1, 1).expect("e1 is a valid direction")
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Replica study settings of a clt, lln or decomposition run at `tau`.
    pub(crate) fn clt_config(
        &self,
        tau: f64,
        alpha: f64,
        allow_alpha_override: bool,
        replicas: usize,
        burn_in: BurnIn,
        observable: &Option<Observable>,
    ) -> CltConfig {
        let mut c = CltConfig::new(observable.clone().unwrap_or_else(first_mode), tau, alpha, replicas, self.master_seed);
        c.allow_alpha_override = allow_alpha_override;
        c.burn_in = burn_in;
        c
    }

    /// Checks every precondition that can be checked without simulating.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid(format!("schema_version {} (expected {SCHEMA_VERSION})", self.schema_version)));
        }
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
            return Err(invalid(format!("name {:?} must match [A-Za-z0-9_-]+", self.name)));
        }
        if self.workers == Some(0) {
            return Err(invalid("workers must be positive"));
        }
        let model = &self.model;
        model.validate()?;
        model.noise.admissibility(model.beta())?;
        match &self.experiment {
            Experiment::TemporalOrder { taus, dim, horizon, replicas, refinement, x0, slope_band } => {
                need_points(taus.len(), 3, "taus")?;
                need_positive(*replicas, "replicas")?;
                if *refinement < 4 {
                    return Err(invalid(format!("refinement {refinement} must be at least 4")));
                }
                for &tau in taus {
                    SchemeParams::new(tau, *dim, 1).validate(model)?;
                    horizon_steps(*horizon, tau)?;
                }
                check_x0(x0, *dim)?;
                check_band(slope_band)?;
            }
            Experiment::SpatialOrder { dims, dim_ref, tau, horizon, replicas, x0, slope_band } => {
                need_points(dims.len(), 3, "dims")?;
                need_positive(*replicas, "replicas")?;
                for &n in dims {
                    if n == 0 || n > *dim_ref {
                        return Err(invalid(format!("dimension {n} must lie in 1..={dim_ref}")));
                    }
                }
                SchemeParams::new(*tau, *dim_ref, 1).validate(model)?;
                horizon_steps(*horizon, *tau)?;
                check_x0(x0, *dim_ref)?;
                check_band(slope_band)?;
            }
            Experiment::InvariantMeasure { tau, dim, steps, mode, batch_len, stderr_multiplier, bias_envelope, .. } => {
                if model.drift.linear_coefficient().is_none() {
                    return Err(Error::UnsupportedModel("invariant_measure needs a linear drift".into()));
                }
                SchemeParams::new(*tau, *dim, 1).validate(model)?;
                if *mode == 0 || mode > dim {
                    return Err(Error::IndexOutOfRange { index: *mode, dim: *dim });
                }
                let len = batch_len.unwrap_or_else(|| crate::estimator::default_batch_len(model, *tau));
                let batches = (*steps as usize).checked_div(len).unwrap_or(0);
                if batches < crate::oracle::MIN_BATCHES {
                    return Err(Error::TooFewBatches { batches });
                }
                need_finite_positive(*stderr_multiplier, "stderr_multiplier")?;
                need_finite_positive(*bias_envelope, "bias_envelope")?;
            }
            Experiment::Lln { taus, alpha, allow_alpha_override, replicas, burn_in, observable, .. } => {
                need_points(taus.len(), 2, "taus")?;
                decreasing(taus)?;
                if *replicas < 2 {
                    return Err(invalid("lln needs at least 2 replicas"));
                }
                for &tau in taus {
                    self.clt_config(tau, *alpha, *allow_alpha_override, *replicas, *burn_in, observable).scheme(model)?;
                }
            }
            Experiment::Clt {
                tau,
                alpha,
                allow_alpha_override,
                replicas,
                burn_in,
                observable,
                reference_batches,
                variance_band,
                mean_sigmas,
                ks_critical,
                ks_allowance,
            } => {
                if *replicas < 2 {
                    return Err(invalid("clt needs at least 2 replicas"));
                }
                self.clt_config(*tau, *alpha, *allow_alpha_override, *replicas, *burn_in, observable).scheme(model)?;
                if *reference_batches < crate::oracle::MIN_BATCHES {
                    return Err(Error::TooFewBatches { batches: *reference_batches });
                }
                check_band(variance_band)?;
                need_finite_positive(*mean_sigmas, "mean_sigmas")?;
                need_finite_positive(*ks_critical, "ks_critical")?;
                if !(ks_allowance.is_finite() && *ks_allowance >= 0.0) {
                    return Err(invalid("ks_allowance must be finite and nonnegative"));
                }
            }
            Experiment::Decomposition { taus, alpha, allow_alpha_override, replicas, burn_in, observable, band_level } => {
                if model.drift.linear_coefficient().is_none() {
                    return Err(Error::UnsupportedModel("decomposition needs a linear drift".into()));
                }
                if let Some(h) = observable {
                    if !matches!(h.kind(), ObservableKind::Linear { .. }) {
                        return Err(Error::UnsupportedModel("decomposition needs a linear observable".into()));
                    }
                }
                need_points(taus.len(), 2, "taus")?;
                decreasing(taus)?;
                if *replicas < 2 {
                    return Err(invalid("decomposition needs at least 2 replicas"));
                }
                if !(*band_level > 0.0 && *band_level < 1.0) {
                    return Err(invalid(format!("band_level {band_level} must lie in (0, 1)")));
                }
                for &tau in taus {
                    self.clt_config(tau, *alpha, *allow_alpha_override, *replicas, *burn_in, observable).scheme(model)?;
                }
            }
        }
        Ok(())
    }
}

fn need_points(n: usize, min: usize, what: &str) -> Result<()> {
    if n < min {
        return Err(invalid(format!("{what} needs at least {min} entries, got {n}")));
    }
    Ok(())
}

fn need_positive(n: usize, what: &str) -> Result<()> {
    if n == 0 {
        return Err(invalid(format!("{what} must be positive")));
    }
    Ok(())
}

fn need_finite_positive(x: f64, what: &str) -> Result<()> {
    if !(x.is_finite() && x > 0.0) {
        return Err(invalid(format!("{what} must be finite and positive, got {x}")));
    }
    Ok(())
}

fn decreasing(taus: &[f64]) -> Result<()> {
    if taus.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(invalid("taus must be strictly decreasing"));
    }
    Ok(())
}

fn check_x0(x0: &Option<SpectralField>, dim: usize) -> Result<()> {
    match x0 {
        Some(x) if x.dim() != dim => Err(Error::DimensionMismatch { expected: dim, found: x.dim() }),
        _ => Ok(()),
    }
}

fn check_band(band: &Option<[f64; 2]>) -> Result<()> {
    match band {
        Some([lo, hi]) if !(lo.is_finite() && hi.is_finite() && lo < hi) => {
            Err(invalid(format!("band [{lo}, {hi}] must be finite and increasing")))
        }
        _ => Ok(()),
    }
}
