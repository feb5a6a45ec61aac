//! 29 points from four unequal groups: nearest-centroid assignment follows
//! the groups, balanced greedy forces (7, 7, 7, 8).

use rand::Rng;
use rand_distr::{Distribution, Normal};
use taskpart::cluster::{assign_balanced_greedy, assign_vanilla, kmeans, KMeansParams};
use taskpart::rng::seeded;
use taskpart::{FeatureMatrix, FeatureVector};

fn main() {
    let centres = [[0.0, 0.0], [4.0, 0.0], [0.0, 4.0], [4.0, 4.0]];
    let counts = [4, 6, 9, 10];
    let mut rng = seeded(11);
    let noise = Normal::new(0.0, 0.4).unwrap();
    let mut rows = Vec::new();
    for (g, (&c, &n)) in centres.iter().zip(&counts).enumerate() {
        for i in 0..n {
            let jitter: f64 = rng.random_range(-0.1..0.1);
            rows.push(FeatureVector {
                id: format!("g{g}-{i:02}"),
                values: vec![c[0] + noise.sample(&mut rng) + jitter, c[1] + noise.sample(&mut rng)],
            });
        }
    }
    let m = FeatureMatrix::new(rows).unwrap();
    let centroids = kmeans(&m, &KMeansParams::new(4, 0)).unwrap();

    let vanilla = assign_vanilla(&m, &centroids).unwrap();
    let balanced = assign_balanced_greedy(&m, &centroids).unwrap();
    println!("group counts    {counts:?}");
    println!("vanilla sizes   {:?}  (max-min {})", vanilla.sorted_sizes(), vanilla.imbalance());
    println!("balanced sizes  {:?}  (max-min {})", balanced.sorted_sizes(), balanced.imbalance());
    for (c, cluster) in balanced.clusters.iter().enumerate() {
        println!("  cluster {c}: {}", cluster.members.join(" "));
    }
}
