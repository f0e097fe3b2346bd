//! Kolmogorov–Smirnov distance to a fixed normal law, sample moments and
//! log-log order fits.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    /// `sup_x |F_n(x) − Φ((x − μ)/σ)|`.
    pub statistic: f64,
    /// Asymptotic Kolmogorov p-value at `√n · D` (approximate).
    pub p_value: f64,
    pub n: usize,
}

/// One-sample KS statistic against `N(mean, variance)` with parameters fixed
/// a priori.
pub fn ks_statistic(sample: &[f64], mean: f64, variance: f64) -> Result<KsResult> {
    if !(variance > 0.0) || !variance.is_finite() {
        return Err(Error::InvalidVariance(variance));
    }
    if sample.is_empty() {
        return Err(Error::SampleTooShort { needed: 1, got: 0 });
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let normal = Normal::new(mean, variance.sqrt()).expect("valid normal parameters");
    let n = sorted.len() as f64;
    let statistic = sorted.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = normal.cdf(x);
        d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    });
    Ok(KsResult { statistic, p_value: kolmogorov_survival(n.sqrt() * statistic), n: sorted.len() })
}

/// `P(K > λ)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let p = if lambda < 1.18 {
        // small-λ form of the CDF converges fast here
        let y = -std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let cdf = (2.0 * std::f64::consts::PI).sqrt() / lambda
            * (1..=20).map(|k| ((2 * k - 1) as f64).powi(2) * y).map(f64::exp).sum::<f64>();
        1.0 - cdf
    } else {
        2.0 * (1..=100)
            .map(|k| {
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * (k * k) as f64 * lambda * lambda).exp()
            })
            .sum::<f64>()
    };
    p.clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub mean: f64,
    /// Unbiased (divisor `n − 1`).
    pub variance: f64,
    /// `m₃ / m₂^{3/2}`; `None` below 3 points or for a degenerate sample.
    pub skewness: Option<f64>,
    /// `m₄ / m₂² − 3`; `None` below 4 points or for a degenerate sample.
    pub excess_kurtosis: Option<f64>,
    pub n: usize,
}

pub fn sample_moments(sample: &[f64]) -> Result<Moments> {
    if sample.len() < 2 {
        return Err(Error::SampleTooShort { needed: 2, got: sample.len() });
    }
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for x in sample {
        let d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    let variance = m2 / (n - 1.0);
    let (m2, m3, m4) = (m2 / n, m3 / n, m4 / n);
    let degenerate = m2 == 0.0;
    Ok(Moments {
        mean,
        variance,
        skewness: (sample.len() >= 3 && !degenerate).then(|| m3 / m2.powf(1.5)),
        excess_kurtosis: (sample.len() >= 4 && !degenerate).then(|| m4 / (m2 * m2) - 3.0),
        n: sample.len(),
    })
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderFit {
    pub slope: f64,
    pub intercept: f64,
    /// `None` when `ln y` is constant (degenerate fit).
    pub r_squared: Option<f64>,
    pub points: Vec<(f64, f64)>,
}

pub fn fit_order(points: &[(f64, f64)]) -> Result<OrderFit> {
    if points.len() < 3 {
        return Err(Error::SampleTooShort { needed: 3, got: points.len() });
    }
    if let Some(&(x, y)) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())) {
        return Err(Error::NonPositive { x, y });
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("order fit needs at least two distinct x values".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = logs.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = (syy > 0.0).then(|| 1.0 - ss_res / syy);
    Ok(OrderFit { slope, intercept, r_squared, points: logs })
}

/// Two-sided `level` band for `s²/σ²` of a normal sample with `n` points.
pub fn chi_square_variance_band(n: usize, level: f64) -> (f64, f64) {
    let df = (n - 1) as f64;
    let chi2 = ChiSquared::new(df).expect("positive degrees of freedom");
    let alpha = 1.0 - level;
    (chi2.inverse_cdf(alpha / 2.0) / df, chi2.inverse_cdf(1.0 - alpha / 2.0) / df)
}

pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn ks_examples() {
        let r = ks_statistic(&[0.0], 0.0, 1.0).unwrap();
        assert_eq!(r.statistic, 0.5);
        let n = 100;
        let quantiles: Vec<f64> = (1..=n).map(|i| normal_quantile((i as f64 - 0.5) / n as f64)).collect();
        let r = ks_statistic(&quantiles, 0.0, 1.0).unwrap();
        assert!(r.statistic <= 0.006, "{}", r.statistic);
        assert!(r.p_value > 0.99);
        assert!(matches!(ks_statistic(&[1.0], 0.0, 0.0), Err(Error::InvalidVariance(_))));
    }

    #[test]
    fn kolmogorov_tail_values() {
        // 1% and 5% critical values of the asymptotic distribution
        assert!((kolmogorov_survival(1.6276) - 0.01).abs() < 1e-4);
        assert!((kolmogorov_survival(1.3581) - 0.05).abs() < 1e-4);
        // both series agree at the switch point
        let y = -std::f64::consts::PI.powi(2) / (8.0 * 1.18f64.powi(2));
        let small = 1.0 - (2.0 * std::f64::consts::PI).sqrt() / 1.18 * (1..=20).map(|k| (((2 * k - 1) as f64).powi(2) * y).exp()).sum::<f64>();
        assert!((small - kolmogorov_survival(1.18)).abs() < 1e-12);
    }

    #[test]
    fn moments_examples() {
        let m = sample_moments(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!((m.mean, m.variance), (1.0, 0.0));
        assert_eq!(m.skewness, None);
        let m = sample_moments(&[0.0, 2.0]).unwrap();
        assert_eq!((m.mean, m.variance), (1.0, 2.0));
        let m = sample_moments(&[-3.0, 0.0, 3.0]).unwrap();
        assert_eq!(m.skewness, Some(0.0));
        assert!(sample_moments(&[1.0]).is_err());
    }

    #[test]
    fn order_fit_examples() {
        let xs: [f64; 4] = [1.0, 2.0, 4.0, 8.0];
        let fit = fit_order(&xs.map(|x| (x, 3.0 * x.sqrt()))).unwrap();
        assert_relative_eq!(fit.slope, 0.5, epsilon = 1e-14);
        assert_relative_eq!(fit.r_squared.unwrap(), 1.0, epsilon = 1e-14);
        let fit = fit_order(&xs.map(|x| (x, 5.0 / (x * x)))).unwrap();
        assert_relative_eq!(fit.slope, -2.0, epsilon = 1e-14);
        let perturbed: Vec<(f64, f64)> =
            xs.iter().enumerate().map(|(i, &x)| (x, x.sqrt() * (1.0 + if i % 2 == 0 { 0.01 } else { -0.01 }))).collect();
        let fit = fit_order(&perturbed).unwrap();
        assert!((0.48..=0.52).contains(&fit.slope), "{}", fit.slope);
        assert!(matches!(fit_order(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]), Err(Error::NonPositive { .. })));
        let flat = fit_order(&[(1.0, 2.0), (2.0, 2.0), (3.0, 2.0)]).unwrap();
        assert_eq!(flat.r_squared, None);
    }

    #[test]
    fn chi_square_band_brackets_one() {
        let (lo, hi) = chi_square_variance_band(400, 0.99);
        assert!(lo < 1.0 && hi > 1.0);
        assert!((lo - 0.827_052_320_657_344).abs() < 1e-9 && (hi - 1.191_767_646_757_276).abs() < 1e-9, "{lo} {hi}");
    }

    proptest! {
        #[test]
        fn ks_is_affine_invariant(
            sample in prop::collection::vec(-3.0f64..3.0, 1..60),
            a in 0.1f64..5.0,
            b in -10.0f64..10.0,
        ) {
            let base = ks_statistic(&sample, 0.2, 1.3).unwrap();
            let moved: Vec<f64> = sample.iter().map(|x| a * x + b).collect();
            let other = ks_statistic(&moved, a * 0.2 + b, a * a * 1.3).unwrap();
            prop_assert!((base.statistic - other.statistic).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&base.statistic));
        }

        #[test]
        fn ks_grows_under_far_translation(sample in prop::collection::vec(-1.0f64..1.0, 2..40)) {
            let mut last = ks_statistic(&sample, 0.0, 1.0).unwrap().statistic;
            for shift in [3.0, 4.0, 6.0, 10.0] {
                let moved: Vec<f64> = sample.iter().map(|x| x + shift).collect();
                let d = ks_statistic(&moved, 0.0, 1.0).unwrap().statistic;
                prop_assert!(d >= last - 1e-15);
                last = d;
            }
        }

        #[test]
        fn order_fit_scale_equivariance(
            ys in prop::collection::vec(0.01f64..10.0, 4),
            c in 0.01f64..100.0,
        ) {
            let pts: Vec<(f64, f64)> = ys.iter().enumerate().map(|(i, y)| (2f64.powi(i as i32), *y)).collect();
            let scaled: Vec<(f64, f64)> = pts.iter().map(|(x, y)| (*x, c * y)).collect();
            let a = fit_order(&pts).unwrap();
            let b = fit_order(&scaled).unwrap();
            prop_assert!((a.slope - b.slope).abs() < 1e-12);
            prop_assert!((b.intercept - a.intercept - c.ln()).abs() < 1e-12);
        }
    }
}
