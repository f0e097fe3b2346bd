//! The time-averaging estimator `Π = m⁻¹ Σ_{k=B}^{B+m−1} h(X_k)`, its CLT
//! normalization and replicate studies under the coupling
//! `m = ⌊τ^{-1-β}⌋`, `N = ⌊τ^{-α}⌋`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{simulate, ExponentialEuler, SchemeParams, Trajectory, TrajectoryState};
use crate::model::ModelSpec;
use crate::noise::NoiseStream;
use crate::oracle::{batch_means_variance, gaussian_expectation_64, linear_poisson_variance, BatchMeans, LinearModelLaw};
use crate::seed::derive_key;
use crate::spectral::{SpectralField, SpectralSpace};

/// Outer function of a composed observable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outer {
    Sin,
    Cos,
    Arctan,
}

impl Outer {
    fn eval(self, u: f64) -> f64 {
        match self {
            Outer::Sin => u.sin(),
            Outer::Cos => u.cos(),
            Outer::Arctan => u.atan(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservableKind {
    /// `h(x) = ⟨v, x⟩`.
    Linear { v: SpectralField },
    /// `h(x) = amplitude · g(gain · ⟨v, x⟩)`.
    Composed {
        g: Outer,
        #[serde(default = "unit")]
        amplitude: f64,
        gain: f64,
        v: SpectralField,
    },
}

fn unit() -> f64 {
    1.0
}

/// Whether an observable lies in the bounded smooth class the CLT is stated
/// for, or is a linear functional kept for its exact references.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservableClass {
    LinearUnbounded,
    BoundedSmooth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ObservableKind", into = "ObservableKind")]
pub struct Observable {
    kind: ObservableKind,
}

impl TryFrom<ObservableKind> for Observable {
    type Error = Error;
    fn try_from(kind: ObservableKind) -> Result<Self> {
        Observable::new(kind)
    }
}

impl From<Observable> for ObservableKind {
    fn from(o: Observable) -> Self {
        o.kind
    }
}

impl Observable {
    pub fn new(kind: ObservableKind) -> Result<Self> {
        let (v, scalars) = match &kind {
            ObservableKind::Linear { v } => (v, vec![]),
            ObservableKind::Composed { amplitude, gain, v, .. } => (v, vec![*amplitude, *gain]),
        };
        if v.coeffs().iter().all(|c| *c == 0.0) {
            return Err(Error::InvalidParameter("observable direction v must be nonzero".into()));
        }
        if scalars.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidParameter("observable amplitude and gain must be finite".into()));
        }
        Ok(Self { kind })
    }

    pub fn linear(v: SpectralField) -> Result<Self> {
        Self::new(ObservableKind::Linear { v })
    }

    pub fn composed(g: Outer, amplitude: f64, gain: f64, v: SpectralField) -> Result<Self> {
        Self::new(ObservableKind::Composed { g, amplitude, gain, v })
    }

    /// `⟨e_index, ·⟩`.
    pub fn mode(dim: usize, index: usize) -> Result<Self> {
        Self::linear(SpectralField::basis(dim, index)?)
    }

    pub fn kind(&self) -> &ObservableKind {
        &self.kind
    }

    pub fn direction(&self) -> &SpectralField {
        match &self.kind {
            ObservableKind::Linear { v } | ObservableKind::Composed { v, .. } => v,
        }
    }

    pub fn class(&self) -> ObservableClass {
        match self.kind {
            ObservableKind::Linear { .. } => ObservableClass::LinearUnbounded,
            ObservableKind::Composed { .. } => ObservableClass::BoundedSmooth,
        }
    }

    /// `h(x)` for coefficients `x`; modes beyond either length are ignored.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let s: f64 = self.direction().coeffs().iter().zip(x).map(|(a, b)| a * b).sum();
        match self.kind {
            ObservableKind::Linear { .. } => s,
            ObservableKind::Composed { g, amplitude, gain, .. } => amplitude * g.eval(gain * s),
        }
    }
}

/// `x ↦ ⌊x⌋`, except that values within `1e-9` (relative) of an integer are
/// rounded to it, so that e.g. `0.01^{-2}` gives 10000.
pub fn robust_floor(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r
    } else {
        x.floor()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Coupling {
    pub tau: f64,
    pub beta: f64,
    pub alpha: f64,
    /// Number of averaged states, `⌊τ^{-1-β}⌋`.
    pub m: u64,
    /// Galerkin dimension, `⌊τ^{-α}⌋`.
    pub dim: usize,
    /// Set when `α ∉ (1/4, 1/2)` was explicitly allowed.
    pub alpha_overridden: bool,
}

pub fn coupling_params(tau: f64, beta: f64, alpha: f64) -> Result<Coupling> {
    coupling_params_with(tau, beta, alpha, false)
}

/// As [`coupling_params`]; with `allow_override` an `α` outside `(1/4, 1/2)`
/// is accepted and flagged instead of rejected.
pub fn coupling_params_with(tau: f64, beta: f64, alpha: f64, allow_override: bool) -> Result<Coupling> {
    if !(tau > 0.0 && tau < 0.5) {
        return Err(Error::InvalidStep(tau));
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::InvalidParameter(format!("beta = {beta} must lie in (0, 1]")));
    }
    if !alpha.is_finite() {
        return Err(Error::CouplingViolation { alpha });
    }
    let inside = alpha > 0.25 && alpha < 0.5;
    if !inside && !allow_override {
        return Err(Error::CouplingViolation { alpha });
    }
    let m = robust_floor(tau.powf(-1.0 - beta)) as u64;
    let dim = robust_floor(tau.powf(-alpha)) as usize;
    if dim == 0 {
        return Err(Error::InvalidDimension(0));
    }
    Ok(Coupling { tau, beta, alpha, m, dim, alpha_overridden: !inside })
}

/// `τ^{-β/2} (Π − π_h)`.
pub fn normalized_deviation(pi: f64, pi_h: f64, tau: f64, beta: f64) -> f64 {
    tau.powf(-beta / 2.0) * (pi - pi_h)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BurnIn {
    /// `⌈5 / ((λ₁ − K) τ)⌉` steps, about five relaxation times.
    #[default]
    Auto,
    Steps(u64),
}

impl BurnIn {
    pub fn resolve(self, model: &ModelSpec, tau: f64) -> u64 {
        match self {
            BurnIn::Auto => relaxation_steps(5.0, model, tau),
            BurnIn::Steps(b) => b,
        }
    }
}

/// `⌈times / ((λ₁ − K) τ)⌉`.
pub fn relaxation_steps(times: f64, model: &ModelSpec, tau: f64) -> u64 {
    (times / (model.margin() * tau)).ceil() as u64
}

/// Streaming accumulator for states `B..B+m−1`.
#[derive(Debug, Clone, Copy)]
pub struct TimeAverage {
    burn_in: u64,
    m: u64,
    sum: f64,
    count: u64,
}

impl TimeAverage {
    pub fn new(burn_in: u64, m: u64) -> Self {
        Self { burn_in, m, sum: 0.0, count: 0 }
    }

    pub fn observe(&mut self, k: u64, value: f64) {
        if k >= self.burn_in && k < self.burn_in + self.m {
            self.sum += value;
            self.count += 1;
        }
    }

    pub fn is_complete(&self) -> bool {
        self.count == self.m
    }

    pub fn value(&self) -> f64 {
        self.sum / self.count as f64
    }
}

/// Time average of `h` over states `B..B+m−1` of `trajectory`, stopping as
/// soon as the last needed state is reached.
pub fn time_average(mut trajectory: Trajectory, h: &Observable, burn_in: u64, m: u64) -> Result<f64> {
    let available = trajectory.total_steps() + 1;
    if m == 0 || available < burn_in + m {
        return Err(Error::InsufficientStates { needed: burn_in + m, got: available });
    }
    let mut acc = TimeAverage::new(burn_in, m);
    loop {
        let state = trajectory.state();
        acc.observe(state.k, h.eval(state.x.coeffs()));
        if acc.is_complete() {
            return Ok(acc.value());
        }
        trajectory.advance()?;
    }
}

/// How a reference value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum ReferenceSource {
    Analytic,
    GaussHermite { error_estimate: f64 },
    LongRun { tau: f64, dim: usize, steps: u64 },
}

/// `π(h)` and the CLT variance `σ²` for an observable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErgodicReference {
    pub pi_h: f64,
    pub pi_h_source: ReferenceSource,
    pub sigma2: f64,
    pub sigma2_source: ReferenceSource,
    pub batch_means: Option<BatchMeans>,
}

/// Default number of batches in reference long runs.
pub const LONG_RUN_BATCHES: usize = 1000;

/// Reference values at step `tau` and dimension `dim`.
///
/// Linear model, linear `h`: `π(h) = 0` and the Poisson variance. Linear
/// model, composed `h`: Gauss–Hermite for `π(h)` and batch means on an
/// independent run (stream `"reference"`) for `σ²`. Nonlinear drift: both
/// from one long run at `(τ/4, 2N)`.
pub fn ergodic_reference(
    model: &ModelSpec,
    h: &Observable,
    tau: f64,
    dim: usize,
    master_seed: u64,
    batches: usize,
) -> Result<ErgodicReference> {
    let v = h.direction().resized(dim);
    match (model.drift.linear_coefficient(), h.kind()) {
        (Some(c), ObservableKind::Linear { .. }) => Ok(ErgodicReference {
            pi_h: 0.0,
            pi_h_source: ReferenceSource::Analytic,
            sigma2: linear_poisson_variance(c, &model.noise, &v, dim)?,
            sigma2_source: ReferenceSource::Analytic,
            batch_means: None,
        }),
        (Some(c), ObservableKind::Composed { g, amplitude, gain, .. }) => {
            let variance = LinearModelLaw::new(c, &model.noise, dim)?.projected_variance(&v);
            let (g, amplitude, gain) = (*g, *amplitude, *gain);
            let quad = gaussian_expectation_64(|z| amplitude * g.eval(gain * z), variance);
            let (bm, source) = long_run(model, h, tau, dim, master_seed, batches)?;
            Ok(ErgodicReference {
                pi_h: quad.value,
                pi_h_source: ReferenceSource::GaussHermite { error_estimate: quad.error_estimate },
                sigma2: bm.sigma2,
                sigma2_source: source,
                batch_means: Some(bm),
            })
        }
        (None, _) => {
            let (bm, source) = long_run(model, h, tau / 4.0, 2 * dim, master_seed, batches)?;
            Ok(ErgodicReference {
                pi_h: bm.mean,
                pi_h_source: source,
                sigma2: bm.sigma2,
                sigma2_source: source,
                batch_means: Some(bm),
            })
        }
    }
}

/// Batch length `⌈20 / ((λ₁ − K) τ)⌉`.
pub fn default_batch_len(model: &ModelSpec, tau: f64) -> usize {
    relaxation_steps(20.0, model, tau) as usize
}

fn long_run(
    model: &ModelSpec,
    h: &Observable,
    tau: f64,
    dim: usize,
    master_seed: u64,
    batches: usize,
) -> Result<(BatchMeans, ReferenceSource)> {
    let batch_len = default_batch_len(model, tau);
    let steps = (batches * batch_len) as u64;
    let burn_in = BurnIn::Auto.resolve(model, tau);
    let series = observe_series(model, h, tau, dim, burn_in, steps, derive_key(master_seed, 0, "reference"))?;
    let bm = batch_means_variance(&series, tau, batch_len)?;
    Ok((bm, ReferenceSource::LongRun { tau, dim, steps }))
}

/// `h(X_k)` for `k = B..B+steps−1` of one chain started at zero.
pub fn observe_series(
    model: &ModelSpec,
    h: &Observable,
    tau: f64,
    dim: usize,
    burn_in: u64,
    steps: u64,
    key: crate::seed::RngKey,
) -> Result<Vec<f64>> {
    if steps == 0 {
        return Err(Error::InsufficientStates { needed: 1, got: 0 });
    }
    let params = SchemeParams::new(tau, dim, steps - 1).with_burn_in(burn_in);
    let trajectory = simulate(model, &params, &SpectralField::zeros(dim), key)?;
    let (series, _) = trajectory.fold(Vec::with_capacity(steps as usize), |mut acc, s| {
        if s.k >= burn_in {
            acc.push(h.eval(s.x.coeffs()));
        }
        acc
    })?;
    Ok(series)
}

/// A replicate study of the normalized deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CltConfig {
    pub observable: Observable,
    pub tau: f64,
    pub alpha: f64,
    #[serde(default)]
    pub allow_alpha_override: bool,
    pub replicas: usize,
    #[serde(default)]
    pub burn_in: BurnIn,
    pub master_seed: u64,
    /// Initial state; zero when absent. Its dimension must equal `N`.
    #[serde(default)]
    pub x0: Option<SpectralField>,
    /// Batches in reference long runs when no closed form exists.
    #[serde(default = "default_batches")]
    pub reference_batches: usize,
}

fn default_batches() -> usize {
    LONG_RUN_BATCHES
}

impl CltConfig {
    pub fn new(observable: Observable, tau: f64, alpha: f64, replicas: usize, master_seed: u64) -> Self {
        Self {
            observable,
            tau,
            alpha,
            allow_alpha_override: false,
            replicas,
            burn_in: BurnIn::Auto,
            master_seed,
            x0: None,
            reference_batches: LONG_RUN_BATCHES,
        }
    }

    pub fn coupling(&self, model: &ModelSpec) -> Result<Coupling> {
        coupling_params_with(self.tau, model.beta(), self.alpha, self.allow_alpha_override)
    }

    /// Scheme parameters of one replica: exactly `B + m` states `X_0..X_{B+m−1}`.
    pub fn scheme(&self, model: &ModelSpec) -> Result<(Coupling, SchemeParams)> {
        let coupling = self.coupling(model)?;
        if self.replicas == 0 {
            return Err(Error::InvalidParameter("at least one replica is required".into()));
        }
        let mut params = SchemeParams::new(self.tau, coupling.dim, coupling.m - 1)
            .with_burn_in(self.burn_in.resolve(model, self.tau));
        params.alpha = (!coupling.alpha_overridden).then_some(coupling.alpha);
        params.validate(model)?;
        model.noise.admissibility(model.beta())?;
        Ok((coupling, params))
    }

    fn initial_state(&self, dim: usize) -> Result<SpectralField> {
        match &self.x0 {
            None => Ok(SpectralField::zeros(dim)),
            Some(x) if x.dim() == dim => Ok(x.clone()),
            Some(x) => Err(Error::DimensionMismatch { expected: dim, found: x.dim() }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CltSample {
    pub replicas: usize,
    pub coupling: Coupling,
    pub burn_in: u64,
    pub observable_class: ObservableClass,
    /// `Π` per replica.
    pub time_averages: Vec<f64>,
    /// `τ^{-β/2}(Π − π_h)` per replica.
    pub deviations: Vec<f64>,
    pub pi_h_ref: f64,
    pub sigma2_ref: f64,
    pub reference: ErgodicReference,
}

/// Runs `R` independent chains (stream `"clt"`), one per replica, in
/// parallel on the current rayon pool. Output order and bits do not depend
/// on the pool size.
pub fn replicate_clt(model: &ModelSpec, config: &CltConfig) -> Result<CltSample> {
    let (coupling, params) = config.scheme(model)?;
    let x0 = config.initial_state(coupling.dim)?;
    let reference = ergodic_reference(
        model,
        &config.observable,
        config.tau,
        coupling.dim,
        config.master_seed,
        config.reference_batches,
    )?;
    let time_averages = run_replicas(config.replicas, |r| {
        let key = derive_key(config.master_seed, r as u64, "clt");
        let trajectory = simulate(model, &params, &x0, key)?;
        time_average(trajectory, &config.observable, params.burn_in, coupling.m)
    })?;
    let deviations = time_averages
        .iter()
        .map(|pi| normalized_deviation(*pi, reference.pi_h, coupling.tau, coupling.beta))
        .collect();
    Ok(CltSample {
        replicas: config.replicas,
        coupling,
        burn_in: params.burn_in,
        observable_class: config.observable.class(),
        time_averages,
        deviations,
        pi_h_ref: reference.pi_h,
        sigma2_ref: reference.sigma2,
        reference,
    })
}

/// Evaluates `f` for replicas `0..replicas` in parallel; the first failing
/// replica (by index) determines the error.
pub fn run_replicas<T: Send>(replicas: usize, f: impl Fn(usize) -> Result<T> + Sync) -> Result<Vec<T>> {
    let results: Vec<Result<T>> = (0..replicas).into_par_iter().map(|r| f(r).map_err(|e| e.in_replica(r))).collect();
    results.into_iter().collect()
}

/// `mean |Π − π_h|` over replicas with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LlnPoint {
    pub tau: f64,
    pub m: u64,
    pub dim: usize,
    pub mean_abs_error: f64,
    pub stderr: f64,
    pub replicas: usize,
}

impl LlnPoint {
    pub fn from_sample(sample: &CltSample) -> Self {
        let errs: Vec<f64> = sample.time_averages.iter().map(|p| (p - sample.pi_h_ref).abs()).collect();
        let n = errs.len() as f64;
        let mean = errs.iter().sum::<f64>() / n;
        let var = if errs.len() > 1 { errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        Self {
            tau: sample.coupling.tau,
            m: sample.coupling.m,
            dim: sample.coupling.dim,
            mean_abs_error: mean,
            stderr: (var / n).sqrt(),
            replicas: errs.len(),
        }
    }
}

/// Martingale part and remainder of the normalized deviation for a linear
/// model and linear observable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionSample {
    pub coupling: Coupling,
    pub burn_in: u64,
    pub deviations: Vec<f64>,
    pub martingale: Vec<f64>,
    pub remainder: Vec<f64>,
    /// `τ^β m Σ_j q_j w_j² (1 − e^{-2λ_jτ})/(2λ_j)`.
    pub martingale_variance: f64,
    pub sigma2_ref: f64,
}

/// For `F = c·Id` and `h = ⟨v,·⟩` the Poisson solution is `φ = ⟨w,·⟩` with
/// `w_j = −v_j/(λ_j − c)`, and
/// `M = −τ^{β/2} Σ_{k=B}^{B+m−1} ⟨∫_0^τ S(τ−s) dW_k(s), w⟩`.
///
/// The stochastic convolution of step `k` is drawn jointly with the scheme
/// increment `ΔW_k`: given `ΔW_k`, mode `j` is Gaussian with mean
/// `(c_j/τ)ΔW_{k,j}` and variance `q_j(v_j − c_j²/τ)`, where
/// `c_j = (1 − e^{-λ_jτ})/λ_j` and `v_j = (1 − e^{-2λ_jτ})/(2λ_j)`. The extra
/// normals come from stream `"decomposition"`, so the trajectories (and the
/// deviations) coincide with [`replicate_clt`] for the same seed.
pub fn decomposition_diagnostic(model: &ModelSpec, config: &CltConfig) -> Result<DecompositionSample> {
    let c = model
        .drift
        .linear_coefficient()
        .ok_or_else(|| Error::UnsupportedModel("decomposition needs a linear drift".into()))?;
    let ObservableKind::Linear { v } = config.observable.kind() else {
        return Err(Error::UnsupportedModel("decomposition needs a linear observable".into()));
    };
    let (coupling, params) = config.scheme(model)?;
    let dim = coupling.dim;
    let x0 = config.initial_state(dim)?;
    let tau = config.tau;
    let beta = model.beta();
    let lambdas = SpectralSpace::new(dim)?.eigenvalues().to_vec();
    let q = model.noise.q_eigenvalues(dim)?;
    let v = v.resized(dim);
    let w: Vec<f64> = lambdas.iter().zip(v.coeffs()).map(|(l, vj)| -vj / (l - c)).collect();
    let cov: Vec<f64> = lambdas.iter().map(|l| -(-l * tau).exp_m1() / l).collect();
    let var: Vec<f64> = lambdas.iter().map(|l| -(-2.0 * l * tau).exp_m1() / (2.0 * l)).collect();
    let resid: Vec<f64> = (0..dim).map(|j| (q[j] * (var[j] - cov[j] * cov[j] / tau).max(0.0)).sqrt()).collect();
    let scale = tau.powf(beta / 2.0);
    let burn_in = params.burn_in;
    let m = coupling.m;
    let ones = vec![1.0; dim];

    let pairs = run_replicas(config.replicas, |r| {
        let mut stepper = ExponentialEuler::for_params(model, &params)?;
        let mut noise = NoiseStream::new(derive_key(config.master_seed, r as u64, "clt"), &q, tau)?;
        let mut aux = NoiseStream::new(derive_key(config.master_seed, r as u64, "decomposition"), &ones, 1.0)?;
        let mut state = TrajectoryState { k: 0, x: x0.clone() };
        let (mut inc, mut z) = (vec![0.0; dim], vec![0.0; dim]);
        let mut avg = TimeAverage::new(burn_in, m);
        let mut mart = 0.0;
        loop {
            avg.observe(state.k, config.observable.eval(state.x.coeffs()));
            if avg.is_complete() {
                break;
            }
            noise.fill(state.k, &mut inc);
            if state.k >= burn_in {
                aux.fill(state.k, &mut z);
                mart += (0..dim).map(|j| w[j] * (cov[j] / tau * inc[j] + resid[j] * z[j])).sum::<f64>();
            }
            stepper.advance(&mut state, &inc)?;
        }
        // the last averaged state's own increment also belongs to the sum
        noise.fill(state.k, &mut inc);
        aux.fill(state.k, &mut z);
        mart += (0..dim).map(|j| w[j] * (cov[j] / tau * inc[j] + resid[j] * z[j])).sum::<f64>();
        Ok((normalized_deviation(avg.value(), 0.0, tau, beta), -scale * mart))
    })?;

    let deviations: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let martingale: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let remainder = deviations.iter().zip(&martingale).map(|(d, mm)| d - mm).collect();
    let martingale_variance =
        tau.powf(beta) * m as f64 * (0..dim).map(|j| q[j] * w[j] * w[j] * var[j]).sum::<f64>();
    Ok(DecompositionSample {
        coupling,
        burn_in,
        deviations,
        martingale,
        remainder,
        martingale_variance,
        sigma2_ref: linear_poisson_variance(c, &model.noise, &v, dim)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drift::DriftSpec;
    use crate::noise::NoiseSpec;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn still() -> ModelSpec {
        ModelSpec::new(DriftSpec::zero(), NoiseSpec::zero(1.0).unwrap()).unwrap()
    }

    #[test]
    fn coupling_examples() {
        let c = coupling_params(0.01, 1.0, 0.4).unwrap();
        assert_eq!((c.m, c.dim), (10_000, 6));
        let c = coupling_params(0.02, 1.0, 0.4).unwrap();
        assert_eq!((c.m, c.dim), (2500, 4));
        assert!(matches!(coupling_params(0.01, 1.0, 0.25), Err(Error::CouplingViolation { .. })));
        let err = coupling_params(0.01, 1.0, 0.6).unwrap_err();
        assert!(err.to_string().contains("alpha outside (1/4,1/2)"));
        let c = coupling_params_with(0.01, 1.0, 0.6, true).unwrap();
        assert!(c.alpha_overridden);
        assert_eq!(c.dim, 15);
    }

    #[test]
    fn normalization_examples() {
        assert_eq!(normalized_deviation(0.7, 0.7, 0.01, 1.0), 0.0);
        assert_relative_eq!(normalized_deviation(0.03, 0.0, 0.01, 1.0), 0.3, max_relative = 1e-14);
        for tau in [0.01, 0.02, 0.04, 0.05, 0.1] {
            let c = coupling_params(tau, 1.0, 0.4).unwrap();
            let scale = (c.m as f64 * tau).sqrt();
            assert!((normalized_deviation(1.0, 0.0, tau, 1.0) - scale).abs() < 1e-12 * scale);
        }
    }

    #[test]
    fn constant_observable_averages_exactly() {
        let model = ModelSpec::ornstein_uhlenbeck(-1.0, 1.0).unwrap();
        let h = Observable::composed(Outer::Cos, 2.5, 0.0, SpectralField::basis(3, 1).unwrap()).unwrap();
        let params = SchemeParams::new(0.01, 3, 200).with_burn_in(10);
        let traj = simulate(&model, &params, &SpectralField::zeros(3), derive_key(1, 0, "t")).unwrap();
        assert_eq!(time_average(traj, &h, 10, 150).unwrap(), 2.5);
    }

    #[test]
    fn deterministic_decay_is_a_geometric_series() {
        let (tau, m) = (0.01, 300u64);
        let params = SchemeParams::new(tau, 4, m);
        let traj = simulate(&still(), &params, &SpectralField::basis(4, 1).unwrap(), derive_key(0, 0, "t")).unwrap();
        let pi = time_average(traj, &Observable::mode(4, 1).unwrap(), 0, m).unwrap();
        let r = (-PI * PI * tau).exp();
        let expected = (1.0 - r.powi(m as i32)) / (1.0 - r) / m as f64;
        assert_relative_eq!(pi, expected, max_relative = 1e-12);
    }

    #[test]
    fn insufficient_states_are_reported() {
        let params = SchemeParams::new(0.01, 2, 10);
        let traj = simulate(&still(), &params, &SpectralField::zeros(2), derive_key(0, 0, "t")).unwrap();
        assert!(matches!(
            time_average(traj, &Observable::mode(2, 1).unwrap(), 5, 10),
            Err(Error::InsufficientStates { needed: 15, got: 11 })
        ));
    }

    #[test]
    fn single_deterministic_replica() {
        let mut config = CltConfig::new(Observable::mode(3, 1).unwrap(), 0.05, 0.4, 1, 9);
        config.burn_in = BurnIn::Steps(0);
        config.x0 = Some(SpectralField::basis(3, 1).unwrap());
        let sample = replicate_clt(&still(), &config).unwrap();
        let m = sample.coupling.m;
        assert_eq!((m, sample.coupling.dim), (400, 3));
        let r = (-PI * PI * 0.05f64).exp();
        let pi = (1.0 - r.powi(m as i32)) / (1.0 - r) / m as f64;
        assert_relative_eq!(sample.deviations[0], 0.05f64.powf(-0.5) * pi, max_relative = 1e-12);
        assert_eq!(sample.sigma2_ref, 0.0);
    }

    #[test]
    fn estimator_is_linear_in_h() {
        let model = ModelSpec::new(DriftSpec::linear(-2.0).unwrap(), NoiseSpec::power_law(-0.5, 0.4).unwrap()).unwrap();
        let (v1, v2) = (SpectralField::new(vec![1.0, -0.5, 0.2]).unwrap(), SpectralField::new(vec![0.0, 2.0, 1.0]).unwrap());
        let combo = SpectralField::new(v1.coeffs().iter().zip(v2.coeffs()).map(|(a, b)| 0.3 * a - 1.7 * b).collect()).unwrap();
        let params = SchemeParams::new(0.01, 3, 500).with_burn_in(20);
        let run = |v: &SpectralField| {
            let traj = simulate(&model, &params, &SpectralField::zeros(3), derive_key(4, 2, "t")).unwrap();
            time_average(traj, &Observable::linear(v.clone()).unwrap(), 20, 480).unwrap()
        };
        let (a, b, c) = (run(&v1), run(&v2), run(&combo));
        assert!((c - (0.3 * a - 1.7 * b)).abs() < 1e-12 * (a.abs() + b.abs()));
    }

    #[test]
    fn replicates_are_deterministic_across_pools() {
        let model = ModelSpec::ornstein_uhlenbeck(-1.0, 1.0).unwrap();
        let config = CltConfig::new(Observable::mode(4, 1).unwrap(), 0.04, 0.4, 12, 77);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| replicate_clt(&model, &config).unwrap())
        };
        let (a, b) = (run(1), run(4));
        assert_eq!(a.deviations.iter().map(|d| d.to_bits()).collect::<Vec<_>>(), b.deviations.iter().map(|d| d.to_bits()).collect::<Vec<_>>());
        assert_eq!(a, b);
    }

    #[test]
    fn ou_time_average_is_within_clt_scale() {
        let model = ModelSpec::ornstein_uhlenbeck(-1.0, 1.0).unwrap();
        let (tau, m, dim) = (0.01, 10_000u64, 4);
        let burn_in = BurnIn::Auto.resolve(&model, tau);
        let sigma2 = linear_poisson_variance(0.0, &model.noise, &SpectralField::basis(dim, 1).unwrap(), dim).unwrap();
        let bound = 4.0 * (sigma2 / (m as f64 * tau)).sqrt();
        let h = Observable::mode(dim, 1).unwrap();
        let params = SchemeParams::new(tau, dim, m - 1).with_burn_in(burn_in);
        let misses = (0..20u64)
            .filter(|&seed| {
                let traj = simulate(&model, &params, &SpectralField::zeros(dim), derive_key(seed, 0, "ou")).unwrap();
                time_average(traj, &h, burn_in, m).unwrap().abs() >= bound
            })
            .count();
        assert!(misses <= 1, "{misses} seeds outside the bound");
    }

    #[test]
    fn gauss_hermite_reference_for_composed_observable() {
        let model = ModelSpec::ornstein_uhlenbeck(-1.0, 1.0).unwrap();
        let h = Observable::composed(Outer::Cos, 1.0, 2.0, SpectralField::basis(4, 1).unwrap()).unwrap();
        let r = ergodic_reference(&model, &h, 0.02, 4, 3, 40).unwrap();
        // E cos(2Z) = exp(-2 s²) with s² = q₁/(2λ₁)
        let s2 = 1.0 / (2.0 * PI.powi(4));
        assert_relative_eq!(r.pi_h, (-2.0 * s2).exp(), max_relative = 1e-13);
        assert!(matches!(r.sigma2_source, ReferenceSource::LongRun { .. }));
    }

    #[test]
    fn decomposition_reproduces_clt_deviations() {
        let model = ModelSpec::ornstein_uhlenbeck(-1.0, 1.0).unwrap();
        let config = CltConfig::new(Observable::mode(4, 1).unwrap(), 0.04, 0.4, 8, 5);
        let clt = replicate_clt(&model, &config).unwrap();
        let dec = decomposition_diagnostic(&model, &config).unwrap();
        assert_eq!(clt.deviations, dec.deviations);
        for ((d, m), r) in dec.deviations.iter().zip(&dec.martingale).zip(&dec.remainder) {
            assert_eq!(*r, d - m);
        }
        let silent = decomposition_diagnostic(&still(), &config).unwrap();
        assert!(silent.martingale.iter().all(|m| *m == 0.0));
        let sine = ModelSpec::new(DriftSpec::sine(1.0).unwrap(), NoiseSpec::power_law(-1.0, 1.0).unwrap()).unwrap();
        assert!(matches!(decomposition_diagnostic(&sine, &config), Err(Error::UnsupportedModel(_))));
    }

    #[test]
    fn observable_rejects_zero_direction() {
        assert!(Observable::linear(SpectralField::zeros(3)).is_err());
        let json = r#"{"kind":"composed","g":"sin","gain":2.0,"v":[1.0,0.0]}"#;
        let h: Observable = serde_json::from_str(json).unwrap();
        assert_eq!(h.class(), ObservableClass::BoundedSmooth);
        assert_relative_eq!(h.eval(&[0.25, 9.0]), 0.5f64.sin());
    }
}
