//! Globally Lipschitz drifts `F` with dissipativity metadata.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{GridTransform, SpectralField, LAMBDA_1};

/// Pointwise nonlinearity of a Nemytskii drift, `f(u) = gain · g(u)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Nonlinearity {
    Sine,
    Arctan,
}

impl Nonlinearity {
    fn eval(self, u: f64) -> f64 {
        match self {
            Nonlinearity::Sine => u.sin(),
            Nonlinearity::Arctan => u.atan(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriftKind {
    Zero,
    /// `F(x) = c x`.
    Linear { c: f64 },
    /// `F(x)(ξ) = gain · g(x(ξ))`.
    Nemytskii { f: Nonlinearity, gain: f64 },
}

/// A drift admissible for the ergodic theory: one-sided Lipschitz constant
/// `K < λ₁` and derivative bound `L_F`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DriftKind", into = "DriftKind")]
pub struct DriftSpec {
    kind: DriftKind,
}

impl TryFrom<DriftKind> for DriftSpec {
    type Error = Error;
    fn try_from(kind: DriftKind) -> Result<Self> {
        DriftSpec::new(kind)
    }
}

impl From<DriftSpec> for DriftKind {
    fn from(spec: DriftSpec) -> Self {
        spec.kind
    }
}

impl DriftSpec {
    pub fn new(kind: DriftKind) -> Result<Self> {
        match kind {
            DriftKind::Zero => {}
            DriftKind::Linear { c } => {
                if !c.is_finite() || c >= LAMBDA_1 {
                    return Err(Error::InadmissibleDrift(format!("linear coefficient c = {c} must be < π²")));
                }
            }
            DriftKind::Nemytskii { gain, .. } => {
                if !gain.is_finite() || gain.abs() >= LAMBDA_1 {
                    return Err(Error::InadmissibleDrift(format!("gain |a| = {} must be < π²", gain.abs())));
                }
            }
        }
        Ok(Self { kind })
    }

    pub fn zero() -> Self {
        Self { kind: DriftKind::Zero }
    }

    pub fn linear(c: f64) -> Result<Self> {
        Self::new(DriftKind::Linear { c })
    }

    pub fn sine(gain: f64) -> Result<Self> {
        Self::new(DriftKind::Nemytskii { f: Nonlinearity::Sine, gain })
    }

    pub fn arctan(gain: f64) -> Result<Self> {
        Self::new(DriftKind::Nemytskii { f: Nonlinearity::Arctan, gain })
    }

    pub fn kind(&self) -> &DriftKind {
        &self.kind
    }

    /// The coefficient `c` when `F = c · Id` (zero drift counts as `c = 0`).
    pub fn linear_coefficient(&self) -> Option<f64> {
        match self.kind {
            DriftKind::Zero => Some(0.0),
            DriftKind::Linear { c } => Some(c),
            DriftKind::Nemytskii { .. } => None,
        }
    }

    /// `(K, L_F)`.
    pub fn metadata(&self) -> (f64, f64) {
        match self.kind {
            DriftKind::Zero => (0.0, 0.0),
            DriftKind::Linear { c } => (c, c.abs()),
            DriftKind::Nemytskii { gain, .. } => (gain.abs(), gain.abs()),
        }
    }

    /// Evaluator for `F^N = P^N F` on `H_dim` with a grid of `grid` points.
    pub fn evaluator(&self, dim: usize, grid: usize) -> Result<DriftEvaluator> {
        let transform = match self.kind {
            DriftKind::Nemytskii { .. } => Some(GridTransform::new(dim, grid)?),
            _ => None,
        };
        Ok(DriftEvaluator { kind: self.kind.clone(), dim, transform, work: vec![0.0; grid] })
    }
}

/// `F^N` with preallocated grid workspace. One instance per trajectory.
pub struct DriftEvaluator {
    kind: DriftKind,
    dim: usize,
    transform: Option<GridTransform>,
    work: Vec<f64>,
}

impl DriftEvaluator {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Writes `F^N(x)` into `out`.
    pub fn apply_into(&mut self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        match self.kind {
            DriftKind::Zero => out.fill(0.0),
            DriftKind::Linear { c } => out.iter_mut().zip(x).for_each(|(o, v)| *o = c * v),
            DriftKind::Nemytskii { f, gain } => {
                let transform = self.transform.as_mut().expect("nemytskii evaluator has a transform");
                transform.synthesize(x, &mut self.work);
                self.work.iter_mut().for_each(|u| *u = gain * f.eval(*u));
                transform.analyze(&mut self.work, out);
            }
        }
    }
}

/// `F^N(x)` evaluated on a grid of `grid` points.
pub fn apply_drift(spec: &DriftSpec, x: &SpectralField, grid: usize) -> Result<SpectralField> {
    let mut eval = spec.evaluator(x.dim(), grid)?;
    let mut out = vec![0.0; x.dim()];
    eval.apply_into(x.coeffs(), &mut out);
    SpectralField::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{default_grid_size, from_grid, to_grid};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{PI, SQRT_2};

    #[test]
    fn simple_drifts() {
        let x = SpectralField::new(vec![0.4, -0.2, 1.5]).unwrap();
        assert_eq!(apply_drift(&DriftSpec::zero(), &x, 11).unwrap(), SpectralField::zeros(3));
        let e1 = SpectralField::basis(4, 1).unwrap();
        let y = apply_drift(&DriftSpec::linear(-1.0).unwrap(), &e1, 15).unwrap();
        assert_eq!(y.coeffs(), &[-1.0, 0.0, 0.0, 0.0]);
        let z = apply_drift(&DriftSpec::sine(1.0).unwrap(), &SpectralField::zeros(4), 15).unwrap();
        assert_eq!(z, SpectralField::zeros(4));
    }

    #[test]
    fn inadmissible_gains_are_rejected() {
        assert!(DriftSpec::linear(PI * PI).is_err());
        assert!(DriftSpec::sine(-10.0).is_err());
        assert!(DriftSpec::arctan(9.8).is_ok());
        let parsed: std::result::Result<DriftSpec, _> =
            serde_json::from_str(r#"{"kind":"nemytskii","f":"arctan","gain":12.0}"#);
        assert!(parsed.is_err());
    }

    #[test]
    fn metadata_table() {
        assert_eq!(DriftSpec::zero().metadata(), (0.0, 0.0));
        assert_eq!(DriftSpec::linear(-2.0).unwrap().metadata(), (-2.0, 2.0));
        assert_eq!(DriftSpec::arctan(3.0).unwrap().metadata(), (3.0, 3.0));
        assert_eq!(DriftSpec::sine(-1.5).unwrap().metadata(), (1.5, 1.5));
    }

    #[test]
    fn sine_drift_matches_quadrature() {
        let x = SpectralField::new({
            let mut v = vec![0.0; 8];
            v[0] = 0.01;
            v
        })
        .unwrap();
        let y = apply_drift(&DriftSpec::sine(1.0).unwrap(), &x, 31).unwrap();
        let points = 10_000;
        for j in 1..=8 {
            let quad: f64 = (0..points)
                .map(|k| {
                    let xi = (k as f64 + 0.5) / points as f64;
                    (0.01 * SQRT_2 * (PI * xi).sin()).sin() * SQRT_2 * (j as f64 * PI * xi).sin()
                })
                .sum::<f64>()
                / points as f64;
            assert!((y.coeffs()[j - 1] - quad).abs() < 1e-9, "mode {j}: {} vs {quad}", y.coeffs()[j - 1]);
        }
    }

    #[test]
    fn identity_nonlinearity_round_trips() {
        // gain·sin(u) ≈ gain·u for tiny u; compare against the transform pair directly
        let x = SpectralField::new(vec![0.3, -0.1, 0.05, 0.2, -0.4]).unwrap();
        let grid = default_grid_size(5);
        let back = from_grid(&to_grid(&x, grid).unwrap(), 5).unwrap();
        for (a, b) in back.coeffs().iter().zip(x.coeffs()) {
            assert!((a - b).abs() < 1e-10);
        }
        let tiny = SpectralField::new(x.coeffs().iter().map(|c| c * 1e-6).collect()).unwrap();
        let y = apply_drift(&DriftSpec::sine(2.0).unwrap(), &tiny, grid).unwrap();
        for (a, b) in y.coeffs().iter().zip(tiny.coeffs()) {
            assert_relative_eq!(*a, 2.0 * b, epsilon = 1e-15);
        }
    }

    #[test]
    fn sampled_lipschitz_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let dim = 12;
        let grid = default_grid_size(dim);
        let specs = [
            DriftSpec::sine(1.0).unwrap(),
            DriftSpec::arctan(3.0).unwrap(),
            DriftSpec::sine(-7.5).unwrap(),
            DriftSpec::linear(-2.0).unwrap(),
        ];
        for spec in &specs {
            let (k, lf) = spec.metadata();
            let mut eval = spec.evaluator(dim, grid).unwrap();
            let (mut fx, mut fy) = (vec![0.0; dim], vec![0.0; dim]);
            for _ in 0..1_000 {
                let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect();
                let y: Vec<f64> = (0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect();
                eval.apply_into(&x, &mut fx);
                eval.apply_into(&y, &mut fy);
                let d2: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum();
                let inner: f64 = x.iter().zip(&y).zip(fx.iter().zip(&fy)).map(|((a, b), (p, q))| (a - b) * (p - q)).sum();
                let df: f64 = fx.iter().zip(&fy).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
                assert!(inner <= (k + 1e-8) * d2);
                assert!(df <= (lf + 1e-8) * d2.sqrt());
            }
        }
    }
}
