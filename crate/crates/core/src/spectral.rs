//! Diagonal spectral machinery for the Dirichlet Laplacian on (0,1).
//!
//! The operator `A = ∂²/∂ξ²` with homogeneous Dirichlet conditions has the
//! orthonormal eigenbasis `e_i(ξ) = √2 sin(iπξ)` with `-A e_i = λ_i e_i`,
//! `λ_i = π² i²`. Every linear operator used by the scheme (fractional
//! powers, the semigroup `S(t) = e^{tA}`, the noise covariance `Q`) is a
//! function of `A` and therefore acts diagonally on the coefficient vector.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::sync::Arc;

use rustdct::{Dst1, DctPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// First eigenvalue of `-A`, the dissipativity threshold for the drift.
pub const LAMBDA_1: f64 = PI * PI;

/// Default Nemytskii grid size `M = 4N - 1`.
pub fn default_grid_size(dim: usize) -> usize {
    4 * dim - 1
}

/// Eigenvalues `λ_i = π² i²`, `i = 1..=N`, of the Galerkin space `H_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSpace {
    eigenvalues: Vec<f64>,
}

impl SpectralSpace {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(dim));
        }
        let eigenvalues = (1..=dim).map(|i| LAMBDA_1 * (i * i) as f64).collect();
        Ok(Self { eigenvalues })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `λ_i` for a 1-based mode index.
    pub fn eigenvalue(&self, index: usize) -> Result<f64> {
        if index == 0 || index > self.dim() {
            return Err(Error::IndexOutOfRange { index, dim: self.dim() });
        }
        Ok(self.eigenvalues[index - 1])
    }

    fn check(&self, x: &SpectralField) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.dim() });
        }
        Ok(())
    }

    /// Applies `(-A)^s`: coefficient `i` is multiplied by `λ_i^s`.
    pub fn apply_fractional_power(&self, s: f64, x: &SpectralField) -> Result<SpectralField> {
        self.check(x)?;
        let coeffs = self.eigenvalues.iter().zip(&x.0).map(|(l, c)| l.powf(s) * c).collect();
        Ok(SpectralField(coeffs))
    }

    /// Per-mode factors `e^{-λ_i t}` of the semigroup `S(t)`.
    pub fn semigroup_factors(&self, t: f64) -> Result<Vec<f64>> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::InvalidTime(t));
        }
        Ok(self.eigenvalues.iter().map(|l| (-l * t).exp()).collect())
    }

    /// Applies `S(t) = e^{tA}`.
    pub fn semigroup_apply(&self, t: f64, x: &SpectralField) -> Result<SpectralField> {
        self.check(x)?;
        let factors = self.semigroup_factors(t)?;
        Ok(SpectralField(factors.iter().zip(&x.0).map(|(f, c)| f * c).collect()))
    }

    /// `‖x‖_s = (Σ λ_i^s x_i²)^{1/2}`; `s = 0` is the L² norm.
    pub fn sobolev_norm(&self, s: f64, x: &SpectralField) -> Result<f64> {
        self.check(x)?;
        let sum: f64 = self.eigenvalues.iter().zip(&x.0).map(|(l, c)| l.powf(s) * c * c).sum();
        Ok(sum.sqrt())
    }
}

/// Coefficients `⟨x, e_i⟩`, `i = 1..=N`, of an element of `H_N`.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SpectralField(Vec<f64>);

impl SpectralField {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidDimension(0));
        }
        if let Some(i) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite { mode: i + 1 });
        }
        Ok(Self(coeffs))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    /// The basis vector `e_index` (1-based) in `H_dim`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index == 0 || index > dim {
            return Err(Error::IndexOutOfRange { index, dim });
        }
        let mut coeffs = vec![0.0; dim];
        coeffs[index - 1] = 1.0;
        Ok(Self(coeffs))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.0
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Inner product over the common modes (both fields are viewed as
    /// zero-padded elements of H).
    pub fn dot(&self, other: &SpectralField) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Zero-padded or truncated copy of dimension `dim`.
    pub fn resized(&self, dim: usize) -> SpectralField {
        let mut coeffs = self.0.clone();
        coeffs.resize(dim, 0.0);
        SpectralField(coeffs)
    }

    /// `‖self − other‖` in H after zero-padding the shorter field.
    pub fn distance(&self, other: &SpectralField) -> f64 {
        let n = self.dim().max(other.dim());
        (0..n)
            .map(|i| {
                let d = self.0.get(i).copied().unwrap_or(0.0) - other.0.get(i).copied().unwrap_or(0.0);
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}

impl fmt::Debug for SpectralField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("SpectralField").field(&self.0).finish()
    }
}

impl TryFrom<Vec<f64>> for SpectralField {
    type Error = Error;

    fn try_from(coeffs: Vec<f64>) -> Result<Self> {
        Self::new(coeffs)
    }
}

impl From<SpectralField> for Vec<f64> {
    fn from(x: SpectralField) -> Self {
        x.0
    }
}

/// Sine synthesis/analysis between `N` coefficients and the interior grid
/// `ξ_j = j/(M+1)`, `j = 1..=M`, backed by a type-I DST of length `M`.
///
/// Holds its own scratch space, so one instance per worker.
pub struct GridTransform {
    dim: usize,
    grid: usize,
    dst: Arc<dyn Dst1<f64>>,
    scratch: Vec<f64>,
}

impl GridTransform {
    pub fn new(dim: usize, grid: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(dim));
        }
        if grid < dim {
            return Err(Error::Aliasing { grid, dim });
        }
        let dst = DctPlanner::new().plan_dst1(grid);
        let scratch = vec![0.0; dst.get_scratch_len()];
        Ok(Self { dim, grid, dst, scratch })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    fn transform(&mut self, values: &mut [f64]) {
        // rustdct's FFT-backed DST-I leaves two slots of its scratch unwritten
        // and relies on them being zero.
        self.scratch.fill(0.0);
        self.dst.process_dst1_with_scratch(values, &mut self.scratch);
    }

    /// Evaluates `Σ_i x_i √2 sin(iπξ_j)` into `values` (length `M`).
    pub fn synthesize(&mut self, coeffs: &[f64], values: &mut [f64]) {
        debug_assert_eq!(coeffs.len(), self.dim);
        debug_assert_eq!(values.len(), self.grid);
        values[..self.dim].copy_from_slice(coeffs);
        values[self.dim..].fill(0.0);
        self.transform(values);
        values.iter_mut().for_each(|v| *v *= SQRT_2);
    }

    /// Discrete sine coefficients of grid `values`, truncated to `N`.
    /// `values` is used as workspace and left transformed.
    pub fn analyze(&mut self, values: &mut [f64], coeffs: &mut [f64]) {
        debug_assert_eq!(coeffs.len(), self.dim);
        debug_assert_eq!(values.len(), self.grid);
        self.transform(values);
        let scale = SQRT_2 / (self.grid + 1) as f64;
        for (c, v) in coeffs.iter_mut().zip(values.iter()) {
            *c = v * scale;
        }
    }
}

/// Grid values of `x` at `ξ_j = j/(M+1)`.
pub fn to_grid(x: &SpectralField, grid: usize) -> Result<Vec<f64>> {
    let mut transform = GridTransform::new(x.dim(), grid)?;
    let mut values = vec![0.0; grid];
    transform.synthesize(x.coeffs(), &mut values);
    Ok(values)
}

/// First `dim` discrete sine coefficients of grid `values`.
pub fn from_grid(values: &[f64], dim: usize) -> Result<SpectralField> {
    let mut transform = GridTransform::new(dim, values.len())?;
    let mut work = values.to_vec();
    let mut coeffs = vec![0.0; dim];
    transform.analyze(&mut work, &mut coeffs);
    SpectralField::new(coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn field(v: &[f64]) -> SpectralField {
        SpectralField::new(v.to_vec()).unwrap()
    }

    #[test]
    fn eigenvalues_follow_pi_squared_i_squared() {
        let s1 = SpectralSpace::new(1).unwrap();
        assert_relative_eq!(s1.eigenvalues()[0], 9.869_604_401_089_358, max_relative = 1e-15);
        let s3 = SpectralSpace::new(3).unwrap();
        assert_eq!(s3.eigenvalues(), &[PI * PI, 4.0 * PI * PI, 9.0 * PI * PI]);
        assert!(matches!(s1.eigenvalue(2), Err(Error::IndexOutOfRange { index: 2, dim: 1 })));
        assert!(matches!(SpectralSpace::new(0), Err(Error::InvalidDimension(0))));
    }

    #[test]
    fn fractional_power_examples() {
        let space = SpectralSpace::new(4).unwrap();
        let x = field(&[0.3, -1.0, 2.0, 0.5]);
        assert_eq!(space.apply_fractional_power(0.0, &x).unwrap(), x);
        let e1 = SpectralField::basis(4, 1).unwrap();
        let y = space.apply_fractional_power(1.0, &e1).unwrap();
        assert_relative_eq!(y.coeffs()[0], PI * PI);
        assert_eq!(&y.coeffs()[1..], &[0.0, 0.0, 0.0]);
        let back = space
            .apply_fractional_power(1.0, &space.apply_fractional_power(-1.0, &x).unwrap())
            .unwrap();
        for (a, b) in back.coeffs().iter().zip(x.coeffs()) {
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
        assert!(matches!(
            space.apply_fractional_power(1.0, &SpectralField::zeros(3)),
            Err(Error::DimensionMismatch { expected: 4, found: 3 })
        ));
    }

    #[test]
    fn semigroup_examples() {
        let space = SpectralSpace::new(3).unwrap();
        let e1 = SpectralField::basis(3, 1).unwrap();
        assert_eq!(space.semigroup_apply(0.0, &e1).unwrap(), e1);
        let y = space.semigroup_apply(0.1, &e1).unwrap();
        // mpmath: exp(-pi^2/10)
        assert_relative_eq!(y.coeffs()[0], 0.372_707_838_853_437_9, max_relative = 1e-14);
        assert!(matches!(space.semigroup_apply(-1e-3, &e1), Err(Error::InvalidTime(_))));
    }

    #[test]
    fn sobolev_norm_examples() {
        let space = SpectralSpace::new(5).unwrap();
        let e1 = SpectralField::basis(5, 1).unwrap();
        assert_relative_eq!(space.sobolev_norm(0.0, &e1).unwrap(), 1.0);
        assert_relative_eq!(space.sobolev_norm(1.0, &e1).unwrap(), PI, max_relative = 1e-15);
    }

    #[test]
    fn smoothing_scalar_bound() {
        for &nu in &[0.5, 1.0] {
            for &t in &[1e-4, 1e-2, 0.3, 2.0] {
                let bound = (nu / (std::f64::consts::E * t)).powf(nu);
                for k in 0..400 {
                    let lambda = 10f64.powf(-1.0 + k as f64 * 0.025);
                    assert!(lambda.powf(nu) * (-lambda * t).exp() <= bound * (1.0 + 1e-12));
                }
            }
        }
    }

    #[test]
    fn to_grid_of_first_basis_vector() {
        let e1 = SpectralField::basis(3, 1).unwrap();
        let values = to_grid(&e1, 7).unwrap();
        for (j, v) in values.iter().enumerate() {
            let xi = (j + 1) as f64 / 8.0;
            assert_relative_eq!(*v, SQRT_2 * (PI * xi).sin(), epsilon = 1e-14);
        }
        assert!(matches!(to_grid(&SpectralField::zeros(8), 7), Err(Error::Aliasing { grid: 7, dim: 8 })));
    }

    #[test]
    fn constant_function_coefficients() {
        let values = vec![1.0; 255];
        let c = from_grid(&values, 8).unwrap();
        for j in 1..=8 {
            // midpoint quadrature of ∫ √2 sin(jπξ) dξ
            let q = 20_000;
            let quad: f64 = (0..q)
                .map(|k| SQRT_2 * (j as f64 * PI * (k as f64 + 0.5) / q as f64).sin())
                .sum::<f64>()
                / q as f64;
            let analytic = if j % 2 == 1 { 2.0 * SQRT_2 / (j as f64 * PI) } else { 0.0 };
            assert!((quad - analytic).abs() < 1e-8);
            assert!((c.coeffs()[j - 1] - analytic).abs() < 1e-3 * 2.0 * SQRT_2 / PI);
        }
    }

    #[test]
    fn reused_transform_is_stable() {
        for grid in [19, 47, 63, 127] {
            let dim = (grid + 1) / 4;
            let mut transform = GridTransform::new(dim, grid).unwrap();
            let x: Vec<f64> = (0..dim).map(|i| 3.0 * (0.7 * i as f64).sin()).collect();
            let mut values = vec![0.0; grid];
            let mut coeffs = vec![0.0; dim];
            for _ in 0..5 {
                transform.synthesize(&x, &mut values);
                values.iter_mut().for_each(|v| *v = v.sin());
                transform.analyze(&mut values, &mut coeffs);
            }
            let x_field = SpectralField::new(x).unwrap();
            let fresh = from_grid(&to_grid(&x_field, grid).unwrap().iter().map(|v| v.sin()).collect::<Vec<_>>(), dim).unwrap();
            for (a, b) in coeffs.iter().zip(fresh.coeffs()) {
                assert!((a - b).abs() < 1e-13);
            }
        }
    }

    proptest! {
        #[test]
        fn grid_round_trip(coeffs in prop::collection::vec(-5.0f64..5.0, 16)) {
            let x = field(&coeffs);
            let back = from_grid(&to_grid(&x, 63).unwrap(), 16).unwrap();
            for (a, b) in back.coeffs().iter().zip(x.coeffs()) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }

        #[test]
        fn parseval_on_grid(coeffs in prop::collection::vec(-3.0f64..3.0, 1..12usize)) {
            let x = field(&coeffs);
            let m = 4 * x.dim() + 3;
            let values = to_grid(&x, m).unwrap();
            let discrete = values.iter().map(|v| v * v).sum::<f64>() / (m + 1) as f64;
            let norm2 = x.norm().powi(2);
            prop_assert!((discrete - norm2).abs() <= 1e-8 * norm2.max(1e-300));
        }

        #[test]
        fn fractional_powers_compose(
            coeffs in prop::collection::vec(-2.0f64..2.0, 6),
            s1 in -2.0f64..2.0,
            s2 in -2.0f64..2.0,
        ) {
            let space = SpectralSpace::new(6).unwrap();
            let x = field(&coeffs);
            let two = space.apply_fractional_power(s1, &space.apply_fractional_power(s2, &x).unwrap()).unwrap();
            let one = space.apply_fractional_power(s1 + s2, &x).unwrap();
            for (a, b) in two.coeffs().iter().zip(one.coeffs()) {
                prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300));
            }
        }

        #[test]
        fn semigroup_property(
            coeffs in prop::collection::vec(-2.0f64..2.0, 6),
            t1 in 0.0f64..0.2,
            t2 in 0.0f64..0.2,
        ) {
            let space = SpectralSpace::new(6).unwrap();
            let x = field(&coeffs);
            let two = space.semigroup_apply(t1, &space.semigroup_apply(t2, &x).unwrap()).unwrap();
            let one = space.semigroup_apply(t1 + t2, &x).unwrap();
            for (a, b) in two.coeffs().iter().zip(one.coeffs()) {
                prop_assert!((a - b).abs() <= 1e-12 * b.abs() + 1e-300);
            }
        }

        #[test]
        fn semigroup_decays_at_first_eigenvalue(coeffs in prop::collection::vec(-2.0f64..2.0, 8)) {
            let space = SpectralSpace::new(8).unwrap();
            let x = field(&coeffs);
            let y = space.semigroup_apply(0.05, &x).unwrap();
            prop_assert!(y.norm() <= (-LAMBDA_1 * 0.05).exp() * x.norm() * (1.0 + 1e-14));
        }

        #[test]
        fn sobolev_norms_are_monotone(
            coeffs in prop::collection::vec(-2.0f64..2.0, 8),
            s1 in 0.0f64..1.0,
            ds in 0.0f64..1.0,
        ) {
            let space = SpectralSpace::new(8).unwrap();
            let x = field(&coeffs);
            let lo = space.sobolev_norm(s1, &x).unwrap();
            let hi = space.sobolev_norm(s1 + ds, &x).unwrap();
            prop_assert!(lo <= hi * (1.0 + 1e-14));
        }
    }
}
