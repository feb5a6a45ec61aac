#![allow(dead_code)]

use rand::Rng;
use taskpart::rng::seeded;
use taskpart::{FeatureMatrix, FeatureVector};

pub fn matrix(rows: &[Vec<f64>]) -> FeatureMatrix {
    FeatureMatrix::new(
        rows.iter()
            .enumerate()
            .map(|(i, r)| FeatureVector {
                id: format!("r{i:03}"),
                values: r.clone(),
            })
            .collect(),
    )
    .unwrap()
}

pub fn random_rows(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = seeded(seed);
    (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect()
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}
