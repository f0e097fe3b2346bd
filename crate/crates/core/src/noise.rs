//! Q-Wiener increments commuting with `A`.
//!
//! The covariance `Q` is diagonal in the sine basis with eigenvalues `q_j`,
//! so an increment over a step `τ` has independent modes
//! `ΔW_j ~ N(0, q_j τ)`.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::RngKey;
use crate::spectral::{SpectralField, LAMBDA_1};

/// Number of explicitly summed terms before the integral tail estimate.
const ADMISSIBILITY_TERMS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseKind {
    /// `Q = 0`; deterministic runs.
    Zero,
    /// `Q = (-A)^κ`, i.e. `q_j = (π² j²)^κ`.
    PowerLaw { kappa: f64 },
    /// Explicit eigenvalues `q_1, q_2, ...`; modes beyond the list are unsupported.
    Explicit { q: Vec<f64> },
}

/// Noise covariance together with the regularity parameter `β`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNoiseSpec", into = "RawNoiseSpec")]
pub struct NoiseSpec {
    kind: NoiseKind,
    beta: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawNoiseSpec {
    Zero { beta: f64 },
    PowerLaw { kappa: f64, beta: f64 },
    Explicit { q: Vec<f64>, beta: f64 },
}

impl TryFrom<RawNoiseSpec> for NoiseSpec {
    type Error = Error;
    fn try_from(raw: RawNoiseSpec) -> Result<Self> {
        match raw {
            RawNoiseSpec::Zero { beta } => NoiseSpec::new(NoiseKind::Zero, beta),
            RawNoiseSpec::PowerLaw { kappa, beta } => NoiseSpec::new(NoiseKind::PowerLaw { kappa }, beta),
            RawNoiseSpec::Explicit { q, beta } => NoiseSpec::new(NoiseKind::Explicit { q }, beta),
        }
    }
}

impl From<NoiseSpec> for RawNoiseSpec {
    fn from(spec: NoiseSpec) -> Self {
        let beta = spec.beta;
        match spec.kind {
            NoiseKind::Zero => RawNoiseSpec::Zero { beta },
            NoiseKind::PowerLaw { kappa } => RawNoiseSpec::PowerLaw { kappa, beta },
            NoiseKind::Explicit { q } => RawNoiseSpec::Explicit { q, beta },
        }
    }
}

/// Squared Hilbert–Schmidt norm `Σ_j λ_j^{β-1} q_j`, evaluated as a partial
/// sum plus an integral estimate of the tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HilbertSchmidt {
    pub value: f64,
    pub partial_sum: f64,
    pub terms: usize,
    /// `partial + ∫_{J+1}^∞`, a lower bound for decreasing terms.
    pub lower: f64,
    /// `partial + ∫_J^∞`, an upper bound for decreasing terms.
    pub upper: f64,
}

impl NoiseSpec {
    pub fn new(kind: NoiseKind, beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::InvalidNoise(format!("beta = {beta} outside (0, 1]")));
        }
        match &kind {
            NoiseKind::Explicit { q } => {
                if q.is_empty() {
                    return Err(Error::InvalidNoise("explicit sequence is empty".into()));
                }
                if let Some(j) = q.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
                    return Err(Error::InvalidNoise(format!("q_{} = {} is not positive", j + 1, q[j])));
                }
            }
            NoiseKind::PowerLaw { kappa } if !kappa.is_finite() => {
                return Err(Error::InvalidNoise(format!("kappa = {kappa}")));
            }
            _ => {}
        }
        let spec = Self { kind, beta };
        spec.admissibility(beta)?;
        Ok(spec)
    }

    pub fn power_law(kappa: f64, beta: f64) -> Result<Self> {
        Self::new(NoiseKind::PowerLaw { kappa }, beta)
    }

    pub fn zero(beta: f64) -> Result<Self> {
        Self::new(NoiseKind::Zero, beta)
    }

    pub fn kind(&self) -> &NoiseKind {
        &self.kind
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, NoiseKind::Zero)
    }

    /// Whether `Range((-A)^{-ε/2}) ⊂ Range(Q^{1/2})` holds for some `ε < 1`.
    /// Recorded as metadata only; `κ ≥ -1` suffices for power laws.
    pub fn range_condition(&self) -> bool {
        match &self.kind {
            NoiseKind::Zero => false,
            NoiseKind::PowerLaw { kappa } => *kappa >= -1.0,
            NoiseKind::Explicit { .. } => true,
        }
    }

    /// `q_1, ..., q_N`.
    pub fn q_eigenvalues(&self, dim: usize) -> Result<Vec<f64>> {
        if dim == 0 {
            return Err(Error::InvalidDimension(0));
        }
        match &self.kind {
            NoiseKind::Zero => Ok(vec![0.0; dim]),
            NoiseKind::PowerLaw { kappa } => {
                Ok((1..=dim).map(|j| (LAMBDA_1 * (j * j) as f64).powf(*kappa)).collect())
            }
            NoiseKind::Explicit { q } => {
                if q.len() < dim {
                    return Err(Error::InvalidNoise(format!(
                        "explicit sequence has {} entries, {dim} modes requested",
                        q.len()
                    )));
                }
                Ok(q[..dim].to_vec())
            }
        }
    }

    /// `‖(-A)^{(β-1)/2} Q^{1/2}‖²_{L₂(H)}` for the given `β`.
    pub fn admissibility(&self, beta: f64) -> Result<HilbertSchmidt> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::InvalidNoise(format!("beta = {beta} outside (0, 1]")));
        }
        match &self.kind {
            NoiseKind::Zero => Ok(HilbertSchmidt { value: 0.0, partial_sum: 0.0, terms: 0, lower: 0.0, upper: 0.0 }),
            NoiseKind::Explicit { q } => {
                let sum = q
                    .iter()
                    .enumerate()
                    .map(|(i, qj)| (LAMBDA_1 * ((i + 1) * (i + 1)) as f64).powf(beta - 1.0) * qj)
                    .sum();
                Ok(HilbertSchmidt { value: sum, partial_sum: sum, terms: q.len(), lower: sum, upper: sum })
            }
            NoiseKind::PowerLaw { kappa } => {
                let exponent = beta - 1.0 + kappa;
                if exponent >= -0.5 {
                    return Err(Error::InadmissibleNoise { exponent });
                }
                let term = |j: f64| (LAMBDA_1 * j * j).powf(exponent);
                // ∫_a^∞ (π² x²)^p dx = π^{2p} a^{2p+1} / (-(2p+1))
                let tail = |a: f64| LAMBDA_1.powf(exponent) * a.powf(2.0 * exponent + 1.0) / -(2.0 * exponent + 1.0);
                let j_max = ADMISSIBILITY_TERMS;
                // sum smallest terms first
                let partial: f64 = (1..=j_max).rev().map(|j| term(j as f64)).sum();
                let n = j_max as f64;
                Ok(HilbertSchmidt {
                    value: partial + tail(n + 0.5),
                    partial_sum: partial,
                    terms: j_max,
                    lower: partial + tail(n + 1.0),
                    upper: partial + tail(n),
                })
            }
        }
    }
}

/// Draws one increment with mode `j` distributed as `N(0, q_j τ)`, modes in
/// increasing order.
pub fn sample_increment<R: Rng + ?Sized>(rng: &mut R, q: &[f64], tau: f64) -> Result<SpectralField> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidStep(tau));
    }
    let coeffs = q
        .iter()
        .map(|qj| {
            let z: f64 = rng.sample(StandardNormal);
            (qj * tau).sqrt() * z
        })
        .collect();
    SpectralField::new(coeffs)
}

/// Counter-based source of increments: the draw for `(step, mode)` does not
/// depend on which other steps or modes were requested.
#[derive(Clone)]
pub struct NoiseStream {
    rng: ChaCha8Rng,
    scale: Vec<f64>,
}

impl NoiseStream {
    pub fn new(key: RngKey, q: &[f64], tau: f64) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::InvalidStep(tau));
        }
        Ok(Self { rng: ChaCha8Rng::seed_from_u64(key.0), scale: q.iter().map(|qj| (qj * tau).sqrt()).collect() })
    }

    pub fn dim(&self) -> usize {
        self.scale.len()
    }

    /// Writes the increment of step `step` into `out` (one entry per mode).
    pub fn fill(&mut self, step: u64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.scale.len());
        self.rng.set_stream(step);
        self.rng.set_word_pos(0);
        for (o, s) in out.iter_mut().zip(&self.scale) {
            let z: f64 = self.rng.sample(StandardNormal);
            *o = s * z;
        }
    }

    pub fn increment(&mut self, step: u64) -> SpectralField {
        let mut out = vec![0.0; self.dim()];
        self.fill(step, &mut out);
        SpectralField::new(out).expect("Gaussian draws are finite")
    }
}

/// A stored sequence of fine increments on one Brownian path.
#[derive(Debug, Clone)]
pub struct IncrementPath {
    pub seed: u64,
    pub fine_step: f64,
    pub increments: Vec<SpectralField>,
}

impl IncrementPath {
    pub fn generate(key: RngKey, q: &[f64], fine_step: f64, steps: usize) -> Result<Self> {
        let mut stream = NoiseStream::new(key, q, fine_step)?;
        let increments = (0..steps as u64).map(|k| stream.increment(k)).collect();
        Ok(Self { seed: key.0, fine_step, increments })
    }

    pub fn aggregate(&self, factor: usize) -> Result<Vec<SpectralField>> {
        aggregate_increments(&self.increments, factor)
    }
}

/// Sums consecutive blocks of `factor` increments mode-wise.
pub fn aggregate_increments(fine: &[SpectralField], factor: usize) -> Result<Vec<SpectralField>> {
    if factor == 0 || !fine.len().is_multiple_of(factor) {
        return Err(Error::IndivisibleLength { len: fine.len(), factor });
    }
    fine.chunks(factor)
        .map(|block| {
            let dim = block[0].dim();
            let mut sum = vec![0.0; dim];
            for inc in block {
                if inc.dim() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, found: inc.dim() });
                }
                sum.iter_mut().zip(inc.coeffs()).for_each(|(s, v)| *s += v);
            }
            SpectralField::new(sum)
        })
        .collect()
}
