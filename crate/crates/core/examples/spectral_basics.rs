//! Sine-basis coefficients, fractional powers of `-A`, the heat semigroup
//! and the grid transform used for pointwise nonlinearities.
//!
//! ```text
//! cargo run --example spectral_basics
//! ```

use spde_core::spectral::{from_grid, to_grid, SpectralField, SpectralSpace};

fn main() -> spde_core::Result<()> {
    let space = SpectralSpace::new(8)?;
    println!("λ_1..λ_3 = {:?}", &space.eigenvalues()[..3]);

    let x = SpectralField::new(vec![1.0, 0.5, -0.25, 0.0, 0.1, 0.0, 0.0, 0.02])?;
    for s in [0.0, 0.5, 1.0] {
        println!("‖x‖_{s} = {:.6}", space.sobolev_norm(s, &x)?);
    }

    let smoothed = space.semigroup_apply(0.01, &x)?;
    println!("S(0.01)x = {smoothed:?}");

    // point values on a grid of 31 interior points, and back
    let values = to_grid(&x, 31)?;
    let back = from_grid(&values, 8)?;
    println!("round-trip error = {:.2e}", back.distance(&x));
    Ok(())
}
