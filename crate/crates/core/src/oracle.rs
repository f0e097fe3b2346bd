//! Reference values for the ergodic statistics.
//!
//! For a linear drift `F = c·Id` everything is Gaussian and diagonal:
//! mode `j` of the invariant law has variance `q_j / (2(λ_j − c))`, and the
//! Poisson equation `Lφ = h − π(h)` for `h = ⟨v,·⟩` is solved by
//! `φ = ⟨w,·⟩` with `w_j = −v_j/(λ_j − c)`, so the CLT variance
//! `π(‖Q^{1/2} Dφ‖²)` is `Σ_j q_j v_j² / (λ_j − c)²`.
//!
//! Models without closed forms fall back to batch means on a long run.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::noise::NoiseSpec;
use crate::spectral::{SpectralField, SpectralSpace};

/// Stationary Gaussian law of the linear model `F = c·Id` on `H_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModelLaw {
    pub c: f64,
    pub q: Vec<f64>,
    pub lambdas: Vec<f64>,
}

impl LinearModelLaw {
    pub fn new(c: f64, noise: &NoiseSpec, dim: usize) -> Result<Self> {
        let lambdas = SpectralSpace::new(dim)?.eigenvalues().to_vec();
        if lambdas[0] - c <= 0.0 {
            return Err(Error::NoDissipativity { k: c });
        }
        Ok(Self { c, q: noise.q_eigenvalues(dim)?, lambdas })
    }

    pub fn dim(&self) -> usize {
        self.lambdas.len()
    }

    /// `q_j / (2(λ_j − c))`.
    pub fn continuous_variances(&self) -> Vec<f64> {
        self.lambdas.iter().zip(&self.q).map(|(l, q)| q / (2.0 * (l - self.c))).collect()
    }

    /// Stationary variances of the scheme's recursion
    /// `x' = e^{-λτ}((1 + cτ)x + w)`, `Var w = qτ`.
    pub fn discrete_variances(&self, tau: f64) -> Result<Vec<f64>> {
        self.lambdas.iter().zip(&self.q).map(|(&l, &q)| scheme_mode_stationary_variance(l, self.c, q, tau)).collect()
    }

    /// Variance of `⟨v, X⟩` under the continuous invariant law.
    pub fn projected_variance(&self, v: &SpectralField) -> f64 {
        self.continuous_variances().iter().zip(v.coeffs()).map(|(s, vj)| s * vj * vj).sum()
    }
}

/// `Σ_j q_j v_j² / (λ_j − c)²` over `j ≤ N`.
pub fn linear_poisson_variance(c: f64, noise: &NoiseSpec, v: &SpectralField, dim: usize) -> Result<f64> {
    let law = LinearModelLaw::new(c, noise, dim)?;
    Ok(law
        .lambdas
        .iter()
        .zip(&law.q)
        .zip(v.coeffs())
        .map(|((l, q), vj)| {
            let w = -vj / (l - c);
            q * w * w
        })
        .sum())
}

/// `2∫₀^∞ Cov_π(⟨v,X_0⟩, ⟨v,X_t⟩) dt`: per mode the stationary variance
/// `q_j/(2(λ_j − c))` times the integrated autocorrelation `2/(λ_j − c)`.
pub fn integrated_autocovariance_variance(c: f64, noise: &NoiseSpec, v: &SpectralField, dim: usize) -> Result<f64> {
    let law = LinearModelLaw::new(c, noise, dim)?;
    Ok(law
        .continuous_variances()
        .iter()
        .zip(&law.lambdas)
        .zip(v.coeffs())
        .map(|((s, l), vj)| vj * vj * s * (2.0 / (l - c)))
        .sum())
}

/// Stationary variance of one OU mode: `q/(2λ)` for the continuous law, or
/// `qτe^{-2λτ}/(1 − e^{-2λτ})` for the scheme `x' = e^{-λτ}(x + w)`.
pub fn ou_mode_stationary_variance(lambda: f64, q: f64, tau: Option<f64>) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("lambda = {lambda}")));
    }
    match tau {
        None => Ok(q / (2.0 * lambda)),
        Some(tau) => scheme_mode_stationary_variance(lambda, 0.0, q, tau),
    }
}

/// `qτe^{-2λτ} / (1 − (1 + cτ)² e^{-2λτ})`.
pub fn scheme_mode_stationary_variance(lambda: f64, c: f64, q: f64, tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::InvalidStep(tau));
    }
    let decay2 = (-2.0 * lambda * tau).exp();
    let rho2 = (1.0 + c * tau).powi(2) * decay2;
    if rho2 >= 1.0 {
        return Err(Error::InvalidParameter(format!("mode recursion not contracting (ρ² = {rho2})")));
    }
    if c == 0.0 {
        // -expm1 keeps precision for small λτ
        return Ok(q * tau * decay2 / -(-2.0 * lambda * tau).exp_m1());
    }
    Ok(q * tau * decay2 / (1.0 - rho2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BatchMeans {
    /// `Lτ · Var(batch means)`, the long-run variance in time units.
    pub sigma2: f64,
    pub batches: usize,
    pub batch_len: usize,
    pub mean: f64,
    /// Standard error of the overall mean, `√(Var(batch means)/B)`.
    pub mean_stderr: f64,
}

/// Minimum number of batches accepted by [`batch_means_variance`].
pub const MIN_BATCHES: usize = 20;

/// Batch-means estimate of `lim_T T · Var(time average)`.
pub fn batch_means_variance(series: &[f64], tau: f64, batch_len: usize) -> Result<BatchMeans> {
    if batch_len == 0 {
        return Err(Error::InvalidParameter("batch length must be positive".into()));
    }
    let batches = series.len() / batch_len;
    if batches < MIN_BATCHES {
        return Err(Error::TooFewBatches { batches });
    }
    let means: Vec<f64> =
        series.chunks_exact(batch_len).map(|b| b.iter().sum::<f64>() / batch_len as f64).collect();
    let b = batches as f64;
    let mean = means.iter().sum::<f64>() / b;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (b - 1.0);
    Ok(BatchMeans { sigma2: batch_len as f64 * tau * var, batches, batch_len, mean, mean_stderr: (var / b).sqrt() })
}

/// Nodes and weights of the `n`-point Gauss–Hermite rule for the weight
/// `e^{-x²}` (Newton iteration on orthonormal Hermite polynomials).
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    const PIM4: f64 = 0.751_125_544_464_942_5; // π^{-1/4}
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    let mut z = 0.0;
    for i in 0..n.div_ceil(2) {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = PIM4;
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// `E g(Z)`, `Z ~ N(0, variance)`, by `n`-point Gauss–Hermite quadrature.
pub fn gaussian_expectation(g: impl Fn(f64) -> f64, variance: f64, n: usize) -> f64 {
    let (x, w) = gauss_hermite(n);
    let scale = (2.0 * variance).sqrt();
    x.iter().zip(&w).map(|(xi, wi)| wi * g(scale * xi)).sum::<f64>() / std::f64::consts::PI.sqrt()
}

/// A quadrature value with the 64- vs 32-node difference as error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quadrature {
    pub value: f64,
    pub error_estimate: f64,
}

pub fn gaussian_expectation_64(g: impl Fn(f64) -> f64, variance: f64) -> Quadrature {
    let value = gaussian_expectation(&g, variance, 64);
    let coarse = gaussian_expectation(&g, variance, 32);
    Quadrature { value, error_estimate: (value - coarse).abs() }
}
