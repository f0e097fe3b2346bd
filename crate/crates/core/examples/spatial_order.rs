//! Strong spatial error of the Galerkin truncation against `N_ref = 128`,
//! with the coarse chain driven by the leading modes of the same noise.
//!
//! ```text
//! cargo run --release --example spatial_order
//! ```

use spde_core::integrator::{coupled_spatial_error, SpatialStudy};
use spde_core::stats::fit_order;
use spde_core::ModelSpec;

fn main() -> spde_core::Result<()> {
    let model = ModelSpec::ornstein_uhlenbeck(-1.0, 1.0)?;
    let mut points = Vec::new();
    for n in [2, 4, 8, 16] {
        let study = SpatialStudy { dim: n, dim_ref: 128, tau: 1e-3, horizon: 1.0, replicas: 64, x0: None };
        let err = coupled_spatial_error(&model, &study, 2024)?;
        println!("N = {n:>2}  rms = {:.4e} ± {:.1e}", err.rms, err.stderr);
        points.push((n as f64, err.rms));
    }
    println!("slope = {:.3}", fit_order(&points)?.slope);
    Ok(())
}
