//! Spectral-Galerkin / exponential-Euler discretization of the stochastic
//! heat equation
//!
//! ```text
//! dX = (AX + F(X)) dt + dW,   A = Dirichlet Laplacian on (0,1),
//! ```
//!
//! driven by a Q-Wiener process commuting with `A`, together with the tools
//! to check its ergodic statistics empirically: strong temporal and spatial
//! orders, invariant-measure accuracy, the weak law of large numbers and
//! the central limit theorem for the time-averaging estimator.

// `!(x > 0.0)` also rejects NaN, which is the point of those guards
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod drift;
pub mod error;
pub mod estimator;
pub mod experiment;
pub mod integrator;
pub mod model;
pub mod noise;
pub mod oracle;
pub mod seed;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
pub use model::ModelSpec;
