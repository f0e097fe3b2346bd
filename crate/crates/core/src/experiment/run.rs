use std::time::Instant;

use crate::error::{Error, Result};
use crate::estimator::{decomposition_diagnostic, default_batch_len, replicate_clt, LlnPoint, ObservableClass};
use crate::integrator::{coupled_spatial_error, coupled_temporal_error, simulate, SchemeParams, SpatialStudy, TemporalStudy};
use crate::oracle::{batch_means_variance, scheme_mode_stationary_variance};
use crate::seed::derive_key;
use crate::spectral::{SpectralField, SpectralSpace};
use crate::stats::{chi_square_variance_band, fit_order, ks_statistic, sample_moments, OrderFit};

use super::config::{Experiment, ExperimentConfig, SCHEMA_VERSION};
use super::output::{
    Check, CltSummary, DecompositionPoint, ExperimentResult, InvariantRecord, OrderPoint, Payload, Provenance,
};

/// Validates `config` and runs it on a pool of `workers` threads (falling
/// back to `config.workers`, then to the number of available cores).
pub fn run_experiment(config: &ExperimentConfig, workers: Option<usize>) -> Result<ExperimentResult> {
    config.validate()?;
    let workers = workers.or(config.workers).unwrap_or_else(|| {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    });
    if workers == 0 {
        return Err(Error::InvalidConfig("workers must be positive".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start {workers} workers: {e}")))?;
    let start = Instant::now();
    let (payload, checks) = pool.install(|| dispatch(config))?;
    let passed = checks.iter().all(|c| c.passed);
    Ok(ExperimentResult {
        schema_version: SCHEMA_VERSION,
        name: config.name.clone(),
        experiment: config.experiment.kind_name(),
        config: config.clone(),
        payload,
        checks,
        passed,
        provenance: Provenance {
            master_seed: config.master_seed,
            workers,
            wall_clock_seconds: start.elapsed().as_secs_f64(),
            version: env!("CARGO_PKG_VERSION"),
        },
    })
}

fn dispatch(config: &ExperimentConfig) -> Result<(Payload, Vec<Check>)> {
    let model = &config.model;
    let beta = model.beta();
    let seed = config.master_seed;
    match &config.experiment {
        Experiment::TemporalOrder { taus, dim, horizon, replicas, refinement, x0, slope_band } => {
            let points = taus
                .iter()
                .map(|&tau| {
                    let study = TemporalStudy {
                        dim: *dim,
                        tau,
                        refinement: *refinement,
                        horizon: *horizon,
                        replicas: *replicas,
                        x0: x0.clone(),
                    };
                    Ok(OrderPoint { x: tau, error: coupled_temporal_error(model, &study, seed)? })
                })
                .collect::<Result<Vec<_>>>()?;
            let fit = order_fit(&points);
            let band = slope_band.unwrap_or([beta / 2.0 - 0.15, beta / 2.0 + 0.15]);
            let checks = vec![slope_check(&fit, band)];
            Ok((Payload::TemporalOrder { points, fit }, checks))
        }
        Experiment::SpatialOrder { dims, dim_ref, tau, horizon, replicas, x0, slope_band } => {
            let points = dims
                .iter()
                .map(|&n| {
                    let study = SpatialStudy {
                        dim: n,
                        dim_ref: *dim_ref,
                        tau: *tau,
                        horizon: *horizon,
                        replicas: *replicas,
                        x0: x0.clone(),
                    };
                    Ok(OrderPoint { x: n as f64, error: coupled_spatial_error(model, &study, seed)? })
                })
                .collect::<Result<Vec<_>>>()?;
            let fit = order_fit(&points);
            let band = slope_band.unwrap_or([-beta - 0.3, -beta + 0.3]);
            let checks = vec![slope_check(&fit, band)];
            Ok((Payload::SpatialOrder { points, fit }, checks))
        }
        Experiment::InvariantMeasure { tau, dim, steps, mode, burn_in, batch_len, stderr_multiplier, bias_envelope } => {
            let c = model.drift.linear_coefficient().expect("validated linear drift");
            let burn_in = burn_in.resolve(model, *tau);
            let params = SchemeParams::new(*tau, *dim, *steps - 1).with_burn_in(burn_in);
            let trajectory = simulate(model, &params, &SpectralField::zeros(*dim), derive_key(seed, 0, "invariant"))?;
            let j = mode - 1;
            let (series, _) = trajectory.fold(Vec::with_capacity(*steps as usize), |mut acc, s| {
                if s.k >= burn_in {
                    acc.push(s.x.coeffs()[j].powi(2));
                }
                acc
            })?;
            let len = batch_len.unwrap_or_else(|| default_batch_len(model, *tau));
            let bm = batch_means_variance(&series, *tau, len)?;
            let lambda = SpectralSpace::new(*dim)?.eigenvalue(*mode)?;
            let q = model.noise.q_eigenvalues(*dim)?[j];
            let discrete = scheme_mode_stationary_variance(lambda, c, q, *tau)?;
            let continuous = q / (2.0 * (lambda - c));
            let record = InvariantRecord {
                tau: *tau,
                dim: *dim,
                mode: *mode,
                steps: *steps,
                burn_in,
                empirical_second_moment: bm.mean,
                batch_means: bm,
                discrete_exact: discrete,
                continuous_exact: continuous,
            };
            let checks = vec![
                Check::within(
                    "second moment vs discrete law (batch standard errors)",
                    (bm.mean - discrete).abs() / bm.mean_stderr,
                    None,
                    Some(*stderr_multiplier),
                ),
                Check::below(
                    "second moment vs continuous law (relative to first-order envelope)",
                    (bm.mean - continuous).abs() / (bias_envelope * lambda * tau * continuous),
                    1.0,
                ),
            ];
            Ok((Payload::InvariantMeasure { record }, checks))
        }
        Experiment::Lln { taus, alpha, allow_alpha_override, replicas, burn_in, observable, allowed_inversions } => {
            let points = taus
                .iter()
                .map(|&tau| {
                    let cfg = config.clt_config(tau, *alpha, *allow_alpha_override, *replicas, *burn_in, observable);
                    Ok(LlnPoint::from_sample(&replicate_clt(model, &cfg)?))
                })
                .collect::<Result<Vec<_>>>()?;
            let mut inversions = 0;
            let mut within_se = true;
            for w in points.windows(2) {
                if w[1].mean_abs_error > w[0].mean_abs_error {
                    inversions += 1;
                    let se = w[0].stderr.hypot(w[1].stderr);
                    within_se &= w[1].mean_abs_error - w[0].mean_abs_error <= se;
                }
            }
            let checks = vec![
                Check::within("inversions of mean |Π − π(h)|", inversions as f64, None, Some(*allowed_inversions as f64)),
                Check::flag("inversions within one standard error", within_se),
            ];
            Ok((Payload::Lln { points, inversions }, checks))
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
            let mut cfg = config.clt_config(*tau, *alpha, *allow_alpha_override, *replicas, *burn_in, observable);
            cfg.reference_batches = *reference_batches;
            let sample = replicate_clt(model, &cfg)?;
            let sigma2 = sample.sigma2_ref;
            if !(sigma2 > 0.0) {
                return Err(Error::InvalidVariance(sigma2));
            }
            let moments = sample_moments(&sample.deviations)?;
            let ks = ks_statistic(&sample.deviations, 0.0, sigma2)?;
            let r = *replicas as f64;
            let ks_threshold = ks_critical / r.sqrt() + ks_allowance;
            let [lo, hi] = variance_band.unwrap_or(match sample.observable_class {
                ObservableClass::LinearUnbounded => [0.6, 1.5],
                ObservableClass::BoundedSmooth => [0.5, 2.0],
            });
            let variance_ratio = moments.variance / sigma2;
            let mean_bound = mean_sigmas * sigma2.sqrt() / r.sqrt();
            let checks = vec![
                Check::within("variance ratio s²/σ²", variance_ratio, Some(lo), Some(hi)),
                Check::within("sample mean", moments.mean, Some(-mean_bound), Some(mean_bound)),
                Check::below("KS distance to N(0, σ²)", ks.statistic, ks_threshold),
            ];
            let summary = CltSummary { sample, moments, variance_ratio, ks, ks_threshold };
            Ok((Payload::Clt { summary: Box::new(summary) }, checks))
        }
        Experiment::Decomposition { taus, alpha, allow_alpha_override, replicas, burn_in, observable, band_level } => {
            let (lo, hi) = chi_square_variance_band(*replicas, *band_level);
            let points = taus
                .iter()
                .map(|&tau| {
                    let cfg = config.clt_config(tau, *alpha, *allow_alpha_override, *replicas, *burn_in, observable);
                    let sample = decomposition_diagnostic(model, &cfg)?;
                    let var_m = sample_moments(&sample.martingale)?.variance;
                    let remainder_std = sample_moments(&sample.remainder)?.variance.sqrt();
                    Ok(DecompositionPoint {
                        tau,
                        m: sample.coupling.m,
                        dim: sample.coupling.dim,
                        martingale_sample_variance: var_m,
                        martingale_variance: sample.martingale_variance,
                        band: [lo * sample.martingale_variance, hi * sample.martingale_variance],
                        remainder_std,
                        sample,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let mut checks: Vec<Check> = points
                .iter()
                .map(|p| {
                    Check::within(
                        format!("Var(M) at tau={} (relative to closed form)", p.tau),
                        p.martingale_sample_variance / p.martingale_variance,
                        Some(lo),
                        Some(hi),
                    )
                })
                .collect();
            checks.push(Check::flag(
                "remainder std strictly decreasing in tau",
                points.windows(2).all(|w| w[1].remainder_std < w[0].remainder_std),
            ));
            Ok((Payload::Decomposition { points }, checks))
        }
    }
}

fn order_fit(points: &[OrderPoint]) -> Option<OrderFit> {
    let pairs: Vec<(f64, f64)> = points.iter().map(|p| (p.x, p.error.rms)).collect();
    fit_order(&pairs).ok()
}

fn slope_check(fit: &Option<OrderFit>, [lo, hi]: [f64; 2]) -> Check {
    Check::within("fitted slope", fit.as_ref().map_or(f64::NAN, |f| f.slope), Some(lo), Some(hi))
}
