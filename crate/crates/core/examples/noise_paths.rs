//! Q-Wiener increments: admissibility of a power-law covariance, keyed
//! counter-based streams, and why truncation consistency matters.
//!
//! ```text
//! cargo run --example noise_paths
//! ```

use spde_core::noise::{aggregate_increments, IncrementPath, NoiseSpec, NoiseStream};
use spde_core::seed::derive_key;

fn main() -> spde_core::Result<()> {
    let noise = NoiseSpec::power_law(-1.0, 1.0)?;
    let hs = noise.admissibility(1.0)?;
    println!("Σ λ_j^(β-1) q_j ≈ {:.10} (bounds [{:.10}, {:.10}])", hs.value, hs.lower, hs.upper);

    // rough noise is only admissible for small β
    println!("Q = I with β = 0.6: {:?}", NoiseSpec::power_law(0.0, 0.6).err().map(|e| e.to_string()));

    let key = derive_key(42, 0, "demo");
    let q4 = noise.q_eigenvalues(4)?;
    let q8 = noise.q_eigenvalues(8)?;
    let small = NoiseStream::new(key, &q4, 0.01)?.increment(7);
    let large = NoiseStream::new(key, &q8, 0.01)?.increment(7);
    println!("step 7, N=4: {small:?}");
    println!("step 7, N=8: {large:?}  (first four modes agree)");

    // sixteen fine steps sum to one coarse step on the same path
    let path = IncrementPath::generate(key, &q4, 0.01 / 16.0, 64)?;
    let coarse = aggregate_increments(&path.increments, 16)?;
    println!("{} fine increments -> {} coarse increments", path.increments.len(), coarse.len());
    Ok(())
}
