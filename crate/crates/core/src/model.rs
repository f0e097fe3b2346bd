use serde::{Deserialize, Serialize};

use crate::drift::DriftSpec;
use crate::error::{Error, Result};
use crate::noise::NoiseSpec;
use crate::spectral::LAMBDA_1;

/// The SPDE `dX = (AX + F(X)) dt + dW` on (0,1) with Dirichlet conditions:
/// drift `F` and noise covariance `Q` (with its regularity `β`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub drift: DriftSpec,
    pub noise: NoiseSpec,
}

impl ModelSpec {
    pub fn new(drift: DriftSpec, noise: NoiseSpec) -> Result<Self> {
        let model = Self { drift, noise };
        model.validate()?;
        Ok(model)
    }

    /// Zero drift with `Q = (-A)^κ`: a product of independent OU modes.
    pub fn ornstein_uhlenbeck(kappa: f64, beta: f64) -> Result<Self> {
        Self::new(DriftSpec::zero(), NoiseSpec::power_law(kappa, beta)?)
    }

    pub fn validate(&self) -> Result<()> {
        let (k, _) = self.drift.metadata();
        if k >= LAMBDA_1 {
            return Err(Error::NoDissipativity { k });
        }
        Ok(())
    }

    pub fn beta(&self) -> f64 {
        self.noise.beta()
    }

    /// One-sided Lipschitz constant `K`.
    pub fn k(&self) -> f64 {
        self.drift.metadata().0
    }

    /// Derivative bound `L_F`.
    pub fn lipschitz(&self) -> f64 {
        self.drift.metadata().1
    }

    /// Dissipativity margin `λ₁ − K`.
    pub fn margin(&self) -> f64 {
        LAMBDA_1 - self.k()
    }
}
