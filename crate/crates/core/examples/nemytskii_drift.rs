//! A nonlinear drift `F(x)(ξ) = a·sin(x(ξ))`: the stability window, a
//! trajectory, and a long-run estimate of a stationary mean.
//!
//! ```text
//! cargo run --release --example nemytskii_drift
//! ```

use spde_core::drift::DriftSpec;
use spde_core::estimator::{ergodic_reference, Observable, Outer};
use spde_core::integrator::{simulate, stability_max_tau, SchemeParams};
use spde_core::noise::NoiseSpec;
use spde_core::seed::derive_key;
use spde_core::spectral::SpectralField;
use spde_core::ModelSpec;

fn main() -> spde_core::Result<()> {
    let model = ModelSpec::new(DriftSpec::sine(4.0)?, NoiseSpec::power_law(-1.0, 1.0)?)?;
    println!("K = {}, L_F = {}, τ_max = {:.4}", model.k(), model.lipschitz(), stability_max_tau(model.k(), model.lipschitz())?);

    let dim = 16;
    let params = SchemeParams::new(0.01, dim, 500);
    let x0 = SpectralField::basis(dim, 1)?;
    let trajectory = simulate(&model, &params, &x0, derive_key(3, 0, "path"))?;
    let (norms, last) = trajectory.fold(Vec::new(), |mut acc, s| {
        if s.k % 100 == 0 {
            acc.push((s.k, s.x.norm()));
        }
        acc
    })?;
    for (k, n) in norms {
        println!("k = {k:>3}  ‖X_k‖ = {n:.5}");
    }
    println!("X_500 = {:?}", last.x);

    // no closed form: π(h) and σ² come from a long run at (τ/4, 2N)
    let h = Observable::composed(Outer::Cos, 1.0, 3.0, SpectralField::basis(1, 1)?)?;
    let reference = ergodic_reference(&model, &h, 0.02, 4, 7, 200)?;
    println!("π(cos(3⟨e1,·⟩)) ≈ {:.5}, σ² ≈ {:.3e} via {:?}", reference.pi_h, reference.sigma2, reference.pi_h_source);
    Ok(())
}
