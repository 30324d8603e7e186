//! Shared fixtures for the benchmarks.

use shiftadjust::{synthetic, ClassDistribution, PredictionMatrix};

/// Synthetic predictions together with their true label distribution.
pub fn instance(n: usize, k: usize, seed: u64) -> (PredictionMatrix, ClassDistribution) {
    let ds = synthetic::generate(n, k, 2, seed).expect("valid generator arguments");
    (ds.predictions().clone(), ds.class_distribution())
}
