//! Strong temporal error of the exponential Euler scheme against a 16×
//! finer step on the same Brownian path, and the fitted order.
//!
//! ```text
//! cargo run --release --example temporal_order
//! ```

use spde_core::integrator::{coupled_temporal_error, TemporalStudy};
use spde_core::stats::fit_order;
use spde_core::ModelSpec;

fn main() -> spde_core::Result<()> {
    for (kappa, beta) in [(-1.0, 1.0), (0.0, 0.45)] {
        let model = ModelSpec::ornstein_uhlenbeck(kappa, beta)?;
        let mut points = Vec::new();
        println!("Q = (-A)^{kappa}, β = {beta}");
        for k in 4..=9 {
            let tau = 2f64.powi(-k);
            let study = TemporalStudy { dim: 32, tau, refinement: 16, horizon: 1.0, replicas: 64, x0: None };
            let err = coupled_temporal_error(&model, &study, 2024)?;
            println!("  τ = 2^-{k}  rms = {:.4e} ± {:.1e}", err.rms, err.stderr);
            points.push((tau, err.rms));
        }
        let fit = fit_order(&points)?;
        println!("  slope = {:.3} (β/2 = {:.3})", fit.slope, beta / 2.0);
    }
    Ok(())
}
