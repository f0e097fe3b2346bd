//! The stationary variance of an OU mode: continuous law, the scheme's own
//! discrete law, and a long-run estimate with a batch-means error bar.
//!
//! ```text
//! cargo run --release --example invariant_measure
//! ```

use spde_core::integrator::{simulate, SchemeParams};
use spde_core::oracle::{batch_means_variance, ou_mode_stationary_variance};
use spde_core::seed::derive_key;
use spde_core::spectral::{SpectralField, LAMBDA_1};
use spde_core::ModelSpec;

fn main() -> spde_core::Result<()> {
    let model = ModelSpec::ornstein_uhlenbeck(-1.0, 1.0)?;
    let q1 = model.noise.q_eigenvalues(1)?[0];
    for tau in [0.1, 0.05, 0.01] {
        let burn_in = 200;
        let params = SchemeParams::new(tau, 4, 400_000).with_burn_in(burn_in);
        let traj = simulate(&model, &params, &SpectralField::zeros(4), derive_key(1, 0, "invariant"))?;
        let (squares, _) = traj.fold(Vec::new(), |mut acc, s| {
            if s.k > burn_in {
                acc.push(s.x.coeffs()[0].powi(2));
            }
            acc
        })?;
        let bm = batch_means_variance(&squares, tau, 2_000)?;
        println!(
            "τ = {tau:<5} empirical {:.5e} ± {:.1e}  discrete {:.5e}  continuous {:.5e}",
            bm.mean,
            bm.mean_stderr,
            ou_mode_stationary_variance(LAMBDA_1, q1, Some(tau))?,
            ou_mode_stationary_variance(LAMBDA_1, q1, None)?
        );
    }
    Ok(())
}
