//! Shared fixtures for the integration tests.
#![allow(dead_code)] // each test target uses its own slice of this module

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use tailsum::decimal::Decimal;
use tailsum::distribution::{Distribution, NormalizationPolicy};

/// A right-skewed integer population on {0, …, 10}. Designed so the masses
/// sum to exactly 1 at twelve decimal digits, mean ≈ 1.818, standard
/// deviation ≈ 2.008, skewness exactly 2.0 and excess kurtosis ≈ 4.789 —
/// skewed enough that the normal approximation misbehaves at small fold
/// counts and recovers at large ones, which several tests lean on.
pub const SKEWED_PMF: [(&str, f64); 11] = [
    ("0", 0.244943160261),
    ("1", 0.329468704785),
    ("2", 0.182425316755),
    ("3", 0.101008064529),
    ("4", 0.055927703903),
    ("5", 0.030966914161),
    ("6", 0.017146238908),
    ("7", 0.009493794155),
    ("8", 0.005256670454),
    ("9", 0.002910594417),
    ("10", 0.020452837672),
];

pub fn skewed_population() -> Distribution {
    let pairs: Vec<(Decimal, f64)> = SKEWED_PMF
        .iter()
        .map(|(v, m)| (v.parse().unwrap(), *m))
        .collect();
    Distribution::from_pairs(&pairs, NormalizationPolicy::Strict).unwrap()
}

/// Deterministic RNG for reproducible random-case sweeps.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random distribution with `support` points on the lattice
/// `quantum · {1, and up to support−1 draws from 0..=60}`. Pinning index 1
/// into the support keeps the canonical quantum equal to `quantum`, so
/// lattice compatibility between two generated distributions is exactly
/// the compatibility of the requested quanta.
pub fn random_dist(rng: &mut ChaCha8Rng, quantum: &str, support: usize) -> Distribution {
    let q: Decimal = quantum.parse().unwrap();
    let mut units = vec![1i64];
    while units.len() < support {
        let u = rng.random_range(0..=60);
        if !units.contains(&u) {
            units.push(u);
        }
    }
    let weights: Vec<f64> = (0..units.len())
        .map(|_| rng.random_range(1..=1000) as f64)
        .collect();
    let total: f64 = weights.iter().sum();
    let pairs: Vec<(Decimal, f64)> = units
        .iter()
        .zip(&weights)
        .map(|(&u, &w)| (q.checked_mul_int(u as i128).unwrap(), w / total))
        .collect();
    Distribution::from_pairs(&pairs, NormalizationPolicy::Renormalize).unwrap()
}
