#![allow(dead_code)]

use std::collections::BTreeMap;

use phistatic::catalog::build_example;
use phistatic::Scene;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn example(name: &str) -> Scene {
    build_example(name, &BTreeMap::new()).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn example_with(name: &str, params: &[(&str, f64)]) -> Scene {
    let p = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    build_example(name, &p).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Five-point central difference of `f` along coordinate `i`.
pub fn fd1(f: &dyn Fn(&[f64]) -> f64, x: &[f64], i: usize, h: f64) -> f64 {
    let at = |s: f64| {
        let mut y = x.to_vec();
        y[i] += s * h;
        f(&y)
    };
    (-at(2.0) + 8.0 * at(1.0) - 8.0 * at(-1.0) + at(-2.0)) / (12.0 * h)
}

/// Central second difference ∂_i∂_j f; mixed partials nest the five-point rule.
pub fn fd2(f: &dyn Fn(&[f64]) -> f64, x: &[f64], i: usize, j: usize, h: f64) -> f64 {
    let at = |si: f64, sj: f64| {
        let mut y = x.to_vec();
        y[i] += si * h;
        y[j] += sj * h;
        f(&y)
    };
    if i == j {
        (-at(1.0, 1.0) + 16.0 * at(0.5, 0.5) - 30.0 * at(0.0, 0.0) + 16.0 * at(-0.5, -0.5) - at(-1.0, -1.0)) / (12.0 * h * h)
    } else {
        let inner = |y: &[f64]| fd1(f, y, j, h);
        fd1(&inner, x, i, h)
    }
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}
