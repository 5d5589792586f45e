//! Shared fixtures for the benchmarks.

use std::collections::BTreeMap;

use phistatic::catalog::build_example;
use phistatic::Scene;

/// A catalog scene with default parameters and one reproducible interior point.
pub fn fixture(name: &str) -> (Scene, Vec<f64>) {
    let s = build_example(name, &BTreeMap::new()).expect("catalog entry");
    let x = s.sample_points(1, 11).remove(0);
    (s, x)
}

/// Deterministic symmetric m×m matrix with entries in (−1, 1).
pub fn symmetric(m: usize, seed: u64) -> Vec<f64> {
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    };
    let mut a = vec![0.0; m * m];
    for i in 0..m {
        for j in i..m {
            let v = next();
            a[i * m + j] = v;
            a[j * m + i] = v;
        }
    }
    a
}
