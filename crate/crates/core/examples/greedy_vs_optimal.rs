//! The greedy balanced assigner against the exact min-cost-flow optimum on
//! small random instances.

use rand::Rng;
use taskpart::cluster::{assign_balanced_greedy, kmeans, optimal_balanced_assignment, KMeansParams};
use taskpart::rng::seeded;
use taskpart::{FeatureMatrix, FeatureVector};

fn main() {
    let (mut worst, mut ratio_sum, mut gaps) = (1.0f64, 0.0, 0);
    let trials = 100;
    for t in 0..trials {
        let mut rng = seeded(t);
        let n = rng.random_range(4..=12);
        let k = rng.random_range(2..=3.min(n));
        let rows = (0..n)
            .map(|i| FeatureVector {
                id: format!("p{i:02}"),
                values: vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)],
            })
            .collect();
        let m = FeatureMatrix::new(rows).unwrap();
        let c = kmeans(&m, &KMeansParams::new(k, t)).unwrap();
        let greedy = assign_balanced_greedy(&m, &c).unwrap().cost.unwrap();
        let exact = optimal_balanced_assignment(&m, &c).unwrap().cost.unwrap();
        let ratio = if exact > 0.0 { greedy / exact } else { 1.0 };
        ratio_sum += ratio;
        worst = worst.max(ratio);
        gaps += usize::from(greedy > exact + 1e-12);
    }
    println!("{trials} instances: greedy above optimum on {gaps}");
    println!("mean squared-distance cost ratio {:.4}, worst {:.4}", ratio_sum / trials as f64, worst);
}
