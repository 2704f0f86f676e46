//! Shared fixtures for the benchmark targets.

use cdcert_core::problems::{generate, GeneratedInstance, SyntheticSpec};

/// The desk-scale instance the benchmarks run on.
pub fn bench_instance(n: usize, p: usize, seed: u64) -> GeneratedInstance {
    generate(&SyntheticSpec {
        n,
        p,
        sparsity: p / 40 + 1,
        signal_low: 0.5,
        signal_high: 1.5,
        noise_sigma: 0.1,
        correlation: 0.0,
        seed,
    })
    .expect("bench spec is valid")
}
