//! Exponential-Euler full discretization
//!
//! ```text
//! X_{k+1} = S^N(τ) (X_k + τ F^N(X_k) + P^N ΔW_k)
//! ```
//!
//! and the paired-path studies built on it: temporal error against a
//! finer step on the same Brownian path, spatial error against a larger
//! Galerkin space driven by the same modes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::drift::DriftEvaluator;
use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::noise::NoiseStream;
use crate::seed::{derive_key, RngKey};
use crate::spectral::{default_grid_size, SpectralField, SpectralSpace, LAMBDA_1};

/// Largest step in the moment/contraction window `τ ≤ (λ₁ − K)/(4 L_F²)`;
/// `f64::INFINITY` when `L_F = 0`.
pub fn stability_max_tau(k: f64, lipschitz: f64) -> Result<f64> {
    if k >= LAMBDA_1 {
        return Err(Error::NoDissipativity { k });
    }
    if lipschitz < 0.0 || !lipschitz.is_finite() {
        return Err(Error::InvalidParameter(format!("L_F = {lipschitz}")));
    }
    if lipschitz == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((LAMBDA_1 - k) / (4.0 * lipschitz * lipschitz))
}

/// Discretization parameters for one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeParams {
    pub tau: f64,
    /// Galerkin dimension `N`.
    pub dim: usize,
    /// Number of states entering statistics (`m`).
    pub steps: u64,
    /// Steps discarded before statistics.
    pub burn_in: u64,
    /// Coupling exponent when `N = ⌊τ^{-α}⌋` was used.
    pub alpha: Option<f64>,
    /// Nemytskii grid size; defaults to `4N − 1`.
    pub grid: Option<usize>,
}

impl SchemeParams {
    pub fn new(tau: f64, dim: usize, steps: u64) -> Self {
        Self { tau, dim, steps, burn_in: 0, alpha: None, grid: None }
    }

    pub fn with_burn_in(mut self, burn_in: u64) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn grid_size(&self) -> usize {
        self.grid.unwrap_or_else(|| default_grid_size(self.dim))
    }

    pub fn total_steps(&self) -> u64 {
        self.burn_in + self.steps
    }

    pub fn validate(&self, model: &ModelSpec) -> Result<()> {
        validate_step(self.tau, model)?;
        if self.dim == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if self.grid_size() < self.dim {
            return Err(Error::Aliasing { grid: self.grid_size(), dim: self.dim });
        }
        if let Some(alpha) = self.alpha {
            if !(alpha > 0.25 && alpha < 0.5) {
                return Err(Error::CouplingViolation { alpha });
            }
        }
        Ok(())
    }
}

/// Checks `tau ∈ (0, 1/2)` and the stability window of `model`.
pub fn validate_step(tau: f64, model: &ModelSpec) -> Result<()> {
    if !(tau > 0.0 && tau < 0.5) {
        return Err(Error::InvalidStep(tau));
    }
    let max = stability_max_tau(model.k(), model.lipschitz())?;
    if tau > max {
        return Err(Error::StabilityWindow { tau, max });
    }
    Ok(())
}

/// The iterate `X^N_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryState {
    pub k: u64,
    pub x: SpectralField,
}

/// One-step map of the scheme with precomputed `e^{-λ_i τ}`.
pub struct ExponentialEuler {
    tau: f64,
    decay: Vec<f64>,
    drift: DriftEvaluator,
    drift_out: Vec<f64>,
}

impl ExponentialEuler {
    pub fn new(model: &ModelSpec, dim: usize, tau: f64, grid: usize) -> Result<Self> {
        let space = SpectralSpace::new(dim)?;
        Ok(Self {
            tau,
            decay: space.semigroup_factors(tau)?,
            drift: model.drift.evaluator(dim, grid)?,
            drift_out: vec![0.0; dim],
        })
    }

    pub fn for_params(model: &ModelSpec, params: &SchemeParams) -> Result<Self> {
        Self::new(model, params.dim, params.tau, params.grid_size())
    }

    pub fn dim(&self) -> usize {
        self.decay.len()
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Advances `state` in place by one step driven by `increment`.
    pub fn advance(&mut self, state: &mut TrajectoryState, increment: &[f64]) -> Result<()> {
        let x = state.x.coeffs_mut();
        self.drift.apply_into(x, &mut self.drift_out);
        for (((xi, fi), wi), di) in x.iter_mut().zip(&self.drift_out).zip(increment).zip(&self.decay) {
            *xi = di * (*xi + self.tau * fi + wi);
        }
        state.k += 1;
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::Divergence { step: state.k, replica: None });
        }
        Ok(())
    }
}

/// `X_{k+1}` from `X_k` and `ΔW_k`.
pub fn step(
    state: &TrajectoryState,
    params: &SchemeParams,
    model: &ModelSpec,
    increment: &SpectralField,
) -> Result<TrajectoryState> {
    params.validate(model)?;
    for dim in [state.x.dim(), increment.dim()] {
        if dim != params.dim {
            return Err(Error::DimensionMismatch { expected: params.dim, found: dim });
        }
    }
    let mut stepper = ExponentialEuler::for_params(model, params)?;
    let mut next = state.clone();
    stepper.advance(&mut next, increment.coeffs())?;
    Ok(next)
}

/// A chain driven by a keyed noise stream; states are produced on demand.
pub struct Trajectory {
    stepper: ExponentialEuler,
    noise: NoiseStream,
    state: TrajectoryState,
    increment: Vec<f64>,
    total_steps: u64,
}

impl Trajectory {
    pub fn state(&self) -> &TrajectoryState {
        &self.state
    }

    pub fn total_steps(&self) -> u64 {
        self.total_steps
    }

    /// Advances one step; `X_k` is driven by the noise of step `k`.
    pub fn advance(&mut self) -> Result<&TrajectoryState> {
        self.noise.fill(self.state.k, &mut self.increment);
        self.stepper.advance(&mut self.state, &self.increment)?;
        Ok(&self.state)
    }

    /// Feeds `X_0, …, X_{total}` to `f` without storing them; returns the
    /// accumulator and the final state.
    pub fn fold<A>(mut self, init: A, mut f: impl FnMut(A, &TrajectoryState) -> A) -> Result<(A, TrajectoryState)> {
        let mut acc = f(init, &self.state);
        while self.state.k < self.total_steps {
            self.advance()?;
            acc = f(acc, &self.state);
        }
        Ok((acc, self.state))
    }
}

/// Sets up a chain of `params.total_steps()` steps from `x0`.
pub fn simulate(model: &ModelSpec, params: &SchemeParams, x0: &SpectralField, key: RngKey) -> Result<Trajectory> {
    params.validate(model)?;
    if x0.dim() != params.dim {
        return Err(Error::DimensionMismatch { expected: params.dim, found: x0.dim() });
    }
    let q = model.noise.q_eigenvalues(params.dim)?;
    Ok(Trajectory {
        stepper: ExponentialEuler::for_params(model, params)?,
        noise: NoiseStream::new(key, &q, params.tau)?,
        state: TrajectoryState { k: 0, x: x0.clone() },
        increment: vec![0.0; params.dim],
        total_steps: params.total_steps(),
    })
}

/// Root-mean-square error over replicas with a delta-method standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorEstimate {
    pub rms: f64,
    pub stderr: f64,
    pub replicas: usize,
}

impl ErrorEstimate {
    pub fn from_squared(squared: &[f64]) -> Self {
        let n = squared.len() as f64;
        let mean = squared.iter().sum::<f64>() / n;
        let var = if squared.len() > 1 {
            squared.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let rms = mean.sqrt();
        let stderr = if rms > 0.0 { (var / n).sqrt() / (2.0 * rms) } else { 0.0 };
        Self { rms, stderr, replicas: squared.len() }
    }
}

/// Number of steps of size `tau` in `horizon`, which must be a multiple of it.
pub fn horizon_steps(horizon: f64, tau: f64) -> Result<u64> {
    let n = (horizon / tau).round();
    if !(horizon > 0.0) || n < 1.0 || (n * tau - horizon).abs() > 1e-9 * horizon {
        return Err(Error::Horizon { horizon, tau });
    }
    Ok(n as u64)
}

fn initial_state(x0: Option<&SpectralField>, dim: usize) -> Result<SpectralField> {
    match x0 {
        None => Ok(SpectralField::zeros(dim)),
        Some(x) if x.dim() == dim => Ok(x.clone()),
        Some(x) => Err(Error::DimensionMismatch { expected: dim, found: x.dim() }),
    }
}

/// Paired coarse/fine runs for the temporal strong error.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalStudy {
    pub dim: usize,
    pub tau: f64,
    /// Fine step is `tau / refinement`.
    pub refinement: usize,
    pub horizon: f64,
    pub replicas: usize,
    pub x0: Option<SpectralField>,
}

/// `√(E‖X^{τ}_T − X^{τ/r}_T‖²)` with both chains on one Brownian path per
/// replica (coarse increments are sums of `r` fine ones).
pub fn coupled_temporal_error(model: &ModelSpec, study: &TemporalStudy, master_seed: u64) -> Result<ErrorEstimate> {
    if study.refinement < 4 {
        return Err(Error::InvalidParameter(format!("refinement {} < 4", study.refinement)));
    }
    if study.replicas == 0 {
        return Err(Error::InvalidParameter("replicas must be positive".into()));
    }
    validate_step(study.tau, model)?;
    let steps = horizon_steps(study.horizon, study.tau)?;
    let r = study.refinement;
    let fine_tau = study.tau / r as f64;
    let grid = default_grid_size(study.dim);
    let x0 = initial_state(study.x0.as_ref(), study.dim)?;
    let q = model.noise.q_eigenvalues(study.dim)?;

    let squared = (0..study.replicas)
        .into_par_iter()
        .map(|replica| -> Result<f64> {
            let mut noise = NoiseStream::new(derive_key(master_seed, replica as u64, "temporal"), &q, fine_tau)?;
            let mut coarse = ExponentialEuler::new(model, study.dim, study.tau, grid)?;
            let mut fine = ExponentialEuler::new(model, study.dim, fine_tau, grid)?;
            let mut xc = TrajectoryState { k: 0, x: x0.clone() };
            let mut xf = xc.clone();
            let mut dw = vec![0.0; study.dim];
            let mut sum = vec![0.0; study.dim];
            for k in 0..steps {
                sum.fill(0.0);
                for i in 0..r as u64 {
                    noise.fill(k * r as u64 + i, &mut dw);
                    fine.advance(&mut xf, &dw).map_err(|e| e.in_replica(replica))?;
                    sum.iter_mut().zip(&dw).for_each(|(s, w)| *s += w);
                }
                coarse.advance(&mut xc, &sum).map_err(|e| e.in_replica(replica))?;
            }
            Ok(xc.x.distance(&xf.x).powi(2))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ErrorEstimate::from_squared(&squared))
}

/// Paired runs in `H_N` and `H_{N_ref}` for the spatial strong error.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialStudy {
    pub dim: usize,
    pub dim_ref: usize,
    pub tau: f64,
    pub horizon: f64,
    pub replicas: usize,
    /// Initial datum in `H_{N_ref}`; the coarse chain starts from its projection.
    pub x0: Option<SpectralField>,
}

/// `√(E‖X^{N}_T − X^{N_ref}_T‖²)` with the coarse chain driven by the first
/// `N` modes of the reference noise.
pub fn coupled_spatial_error(model: &ModelSpec, study: &SpatialStudy, master_seed: u64) -> Result<ErrorEstimate> {
    if study.dim == 0 {
        return Err(Error::InvalidDimension(0));
    }
    if study.dim_ref < study.dim {
        return Err(Error::InvalidParameter(format!(
            "reference dimension {} below coarse dimension {}",
            study.dim_ref, study.dim
        )));
    }
    if study.replicas == 0 {
        return Err(Error::InvalidParameter("replicas must be positive".into()));
    }
    validate_step(study.tau, model)?;
    let steps = horizon_steps(study.horizon, study.tau)?;
    let x0_ref = initial_state(study.x0.as_ref(), study.dim_ref)?;
    let x0 = x0_ref.resized(study.dim);
    let q = model.noise.q_eigenvalues(study.dim_ref)?;

    let squared = (0..study.replicas)
        .into_par_iter()
        .map(|replica| -> Result<f64> {
            let mut noise = NoiseStream::new(derive_key(master_seed, replica as u64, "spatial"), &q, study.tau)?;
            let mut coarse = ExponentialEuler::new(model, study.dim, study.tau, default_grid_size(study.dim))?;
            let mut reference = ExponentialEuler::new(model, study.dim_ref, study.tau, default_grid_size(study.dim_ref))?;
            let mut xc = TrajectoryState { k: 0, x: x0.clone() };
            let mut xr = TrajectoryState { k: 0, x: x0_ref.clone() };
            let mut dw = vec![0.0; study.dim_ref];
            for k in 0..steps {
                noise.fill(k, &mut dw);
                reference.advance(&mut xr, &dw).map_err(|e| e.in_replica(replica))?;
                coarse.advance(&mut xc, &dw[..study.dim]).map_err(|e| e.in_replica(replica))?;
            }
            Ok(xc.x.distance(&xr.x).powi(2))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ErrorEstimate::from_squared(&squared))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drift::DriftSpec;
    use crate::noise::NoiseSpec;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn deterministic(drift: DriftSpec) -> ModelSpec {
        ModelSpec::new(drift, NoiseSpec::zero(1.0).unwrap()).unwrap()
    }

    #[test]
    fn stability_window() {
        // (π² − 0)/4
        assert_relative_eq!(stability_max_tau(0.0, 1.0).unwrap(), 2.467_401_100_272_339_7, max_relative = 1e-15);
        assert_eq!(stability_max_tau(3.0, 0.0).unwrap(), f64::INFINITY);
        assert!(matches!(stability_max_tau(PI * PI, 1.0), Err(Error::NoDissipativity { .. })));

        let model = ModelSpec::new(DriftSpec::sine(9.0).unwrap(), NoiseSpec::power_law(-1.0, 1.0).unwrap()).unwrap();
        // (π² − 9)/(4·81) ≈ 2.68e-3
        assert!(matches!(
            SchemeParams::new(0.01, 4, 10).validate(&model),
            Err(Error::StabilityWindow { .. })
        ));
        assert!(SchemeParams::new(0.002, 4, 10).validate(&model).is_ok());
        assert!(matches!(
            SchemeParams::new(0.5, 4, 10).validate(&ModelSpec::ornstein_uhlenbeck(-1.0, 1.0).unwrap()),
            Err(Error::InvalidStep(_))
        ));
    }

    #[test]
    fn step_examples() {
        let model = deterministic(DriftSpec::zero());
        let params = SchemeParams::new(0.1, 3, 1);
        let e1 = TrajectoryState { k: 0, x: SpectralField::basis(3, 1).unwrap() };
        let next = step(&e1, &params, &model, &SpectralField::zeros(3)).unwrap();
        assert_eq!(next.k, 1);
        assert_relative_eq!(next.x.coeffs()[0], 0.372_707_838_853_437_9, max_relative = 1e-14);

        let w = SpectralField::new(vec![0.2, -0.5, 1.0]).unwrap();
        let zero = TrajectoryState { k: 0, x: SpectralField::zeros(3) };
        let next = step(&zero, &params, &model, &w).unwrap();
        let expected = SpectralSpace::new(3).unwrap().semigroup_apply(0.1, &w).unwrap();
        assert_eq!(next.x, expected);

        assert!(matches!(
            step(&zero, &params, &model, &SpectralField::zeros(2)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn linear_step_matches_per_mode_recursion() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let dim = 10;
        let lambdas = SpectralSpace::new(dim).unwrap().eigenvalues().to_vec();
        for _ in 0..1_000 {
            let c = rng.gen_range(-5.0..5.0);
            let tau = rng.gen_range(1e-4..stability_max_tau(c, c.abs()).unwrap().min(0.49));
            let model = ModelSpec::new(DriftSpec::linear(c).unwrap(), NoiseSpec::power_law(-1.0, 1.0).unwrap()).unwrap();
            let params = SchemeParams::new(tau, dim, 1);
            let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let w: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let state = TrajectoryState { k: 0, x: SpectralField::new(x.clone()).unwrap() };
            let next = step(&state, &params, &model, &SpectralField::new(w.clone()).unwrap()).unwrap();
            for i in 0..dim {
                let e = (-lambdas[i] * tau).exp();
                let closed = e * (1.0 + c * tau) * x[i] + e * w[i];
                assert!((next.x.coeffs()[i] - closed).abs() <= 1e-14 * closed.abs().max(1.0));
            }
        }
    }

    #[test]
    fn divergence_is_reported_with_step() {
        let model = deterministic(DriftSpec::zero());
        let params = SchemeParams::new(0.01, 2, 1);
        let state = TrajectoryState { k: 41, x: SpectralField::new(vec![f64::MAX, 0.0]).unwrap() };
        let w = SpectralField::new(vec![f64::MAX, 0.0]).unwrap();
        assert!(matches!(step(&state, &params, &model, &w), Err(Error::Divergence { step: 42, replica: None })));
    }

    #[test]
    fn deterministic_decay() {
        let model = deterministic(DriftSpec::zero());
        let params = SchemeParams::new(0.01, 4, 200);
        let x0 = SpectralField::basis(4, 1).unwrap();
        let traj = simulate(&model, &params, &x0, RngKey(1)).unwrap();
        let (max_err, last) = traj
            .fold(0.0f64, |err, s| {
                let exact = (-PI * PI * 0.01 * s.k as f64).exp();
                err.max((s.x.norm() - exact).abs() / exact)
            })
            .unwrap();
        assert_eq!(last.k, 200);
        assert!(max_err < 1e-12, "{max_err}");
    }

    #[test]
    fn same_key_reproduces_trajectory() {
        let model = ModelSpec::new(DriftSpec::sine(1.0).unwrap(), NoiseSpec::power_law(0.0, 0.45).unwrap()).unwrap();
        let params = SchemeParams::new(0.01, 8, 50);
        let x0 = SpectralField::zeros(8);
        let run = || simulate(&model, &params, &x0, RngKey(99)).unwrap().fold((), |_, _| ()).unwrap().1;
        assert_eq!(run(), run());
    }

    #[test]
    fn shared_noise_contraction_every_step() {
        let model = ModelSpec::new(DriftSpec::sine(1.0).unwrap(), NoiseSpec::power_law(-1.0, 1.0).unwrap()).unwrap();
        let tau = 0.01;
        let params = SchemeParams::new(tau, 8, 2_000);
        let x0 = SpectralField::zeros(8);
        let y0 = SpectralField::new(vec![1.0, -0.5, 0.3, 0.0, 0.2, 0.0, 0.0, 0.1]).unwrap();
        let d0 = x0.distance(&y0);
        let rate = (PI * PI - 1.0) / 2.0;
        let mut a = simulate(&model, &params, &x0, RngKey(5)).unwrap();
        let mut b = simulate(&model, &params, &y0, RngKey(5)).unwrap();
        for _ in 0..2_000 {
            let sa = a.advance().unwrap().clone();
            let sb = b.advance().unwrap();
            let bound = (-rate * tau * sa.k as f64).exp() * d0;
            assert!(sa.x.distance(&sb.x) <= bound * (1.0 + 1e-12) + 1e-300);
        }
    }

    #[test]
    fn temporal_error_is_zero_for_deterministic_linear_flow() {
        let model = deterministic(DriftSpec::zero());
        let study = TemporalStudy {
            dim: 6,
            tau: 0.05,
            refinement: 8,
            horizon: 1.0,
            replicas: 3,
            x0: Some(SpectralField::new(vec![1.0, 0.5, -0.2, 0.0, 0.1, 0.3]).unwrap()),
        };
        let err = coupled_temporal_error(&model, &study, 1).unwrap();
        assert!(err.rms < 1e-12, "{}", err.rms);
    }

    #[test]
    fn temporal_error_matches_closed_form_linear_recursion() {
        let c = -1.0;
        let model = deterministic(DriftSpec::linear(c).unwrap());
        let (tau, r, horizon) = (0.05, 16, 1.0);
        let study = TemporalStudy {
            dim: 4,
            tau,
            refinement: r,
            horizon,
            replicas: 2,
            x0: Some(SpectralField::basis(4, 1).unwrap()),
        };
        let err = coupled_temporal_error(&model, &study, 3).unwrap();
        let n = 20;
        let fine_tau = tau / r as f64;
        let lambda = PI * PI;
        let coarse = ((-lambda * tau).exp() * (1.0 + c * tau)).powi(n);
        let fine = ((-lambda * fine_tau).exp() * (1.0 + c * fine_tau)).powi(n * r as i32);
        assert!((err.rms - (coarse - fine).abs()).abs() < 1e-12);

        let bad = TemporalStudy { horizon: 1.01, ..study.clone() };
        assert!(matches!(coupled_temporal_error(&model, &bad, 3), Err(Error::Horizon { .. })));
        let coarse_ref = TemporalStudy { refinement: 2, ..study };
        assert!(coupled_temporal_error(&model, &coarse_ref, 3).is_err());
    }

    #[test]
    fn spatial_error_trivial_cases() {
        let model = ModelSpec::ornstein_uhlenbeck(-1.0, 1.0).unwrap();
        let study = SpatialStudy { dim: 8, dim_ref: 8, tau: 0.01, horizon: 0.5, replicas: 4, x0: None };
        assert_eq!(coupled_spatial_error(&model, &study, 7).unwrap().rms, 0.0);

        let det = deterministic(DriftSpec::zero());
        let x0 = SpectralField::new([vec![1.0, -0.5, 0.25], vec![0.0; 29]].concat()).unwrap();
        let study = SpatialStudy { dim: 3, dim_ref: 32, tau: 0.01, horizon: 0.5, replicas: 2, x0: Some(x0) };
        assert!(coupled_spatial_error(&det, &study, 7).unwrap().rms < 1e-15);

        let bad = SpatialStudy { dim: 16, dim_ref: 8, tau: 0.01, horizon: 0.5, replicas: 2, x0: None };
        assert!(coupled_spatial_error(&model, &bad, 7).is_err());
    }
}
