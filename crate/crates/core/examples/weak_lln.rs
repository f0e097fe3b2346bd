//! Weak law of large numbers: the time average of `⟨e₁, X⟩` approaches
//! `π(h) = 0` as `τ → 0` under `m = ⌊τ^{-1-β}⌋`, `N = ⌊τ^{-α}⌋`.
//!
//! ```text
//! cargo run --release --example weak_lln
//! ```

use spde_core::estimator::{replicate_clt, CltConfig, LlnPoint, Observable};
use spde_core::ModelSpec;

fn main() -> spde_core::Result<()> {
    let model = ModelSpec::ornstein_uhlenbeck(-1.0, 1.0)?;
    for tau in [0.04, 0.02, 0.01, 0.005] {
        let config = CltConfig::new(Observable::mode(1, 1)?, tau, 0.4, 200, 5);
        let point = LlnPoint::from_sample(&replicate_clt(&model, &config)?);
        println!(
            "τ = {tau:<6} m = {:>6}  N = {:>2}  mean |Π - π(h)| = {:.3e} ± {:.1e}",
            point.m, point.dim, point.mean_abs_error, point.stderr
        );
    }
    Ok(())
}
