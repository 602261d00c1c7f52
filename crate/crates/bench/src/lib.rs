//! Inputs shared by the benchmarks.

use confheat_core::rng::substream;
use confheat_core::Configuration;
use rand::Rng;

/// `n` points uniform in `[-half, half]^dim`, reproducible from `seed`.
pub fn cloud(seed: u64, n: usize, dim: usize, half: f64) -> Vec<Vec<f64>> {
    let mut r = substream(seed, &[]);
    (0..n)
        .map(|_| (0..dim).map(|_| r.random_range(-half..half)).collect())
        .collect()
}

pub fn configuration(seed: u64, n: usize, dim: usize, half: f64) -> Configuration {
    Configuration::from_points_auto(dim, &cloud(seed, n, dim, half)).expect("nonempty cloud")
}

/// A random `n × n` matrix with entries in `[-1, 1)`, row major.
pub fn matrix(seed: u64, n: usize) -> Vec<f64> {
    let mut r = substream(seed, &[1]);
    (0..n * n).map(|_| r.random_range(-1.0..1.0)).collect()
}
