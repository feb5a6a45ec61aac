//! Feature-driven partitioning of simulator variations, scored against the
//! hidden archetypes. Writes a scatter plot when given an output path.
//!
//! cargo run --example partition_features -- [scatter.svg]

use taskpart::cli::partition_features;
use taskpart::cluster::{adjusted_rand_index, CapacityRule};
use taskpart::evalrep::cluster_scatter_svg;
use taskpart::gslsim::{generate_variations, variation_features, RunConfig};
use taskpart::PartitionMethod;

fn main() {
    let config = RunConfig {
        n_variations: 32,
        ..RunConfig::default()
    };
    let variations = generate_variations(&config).expect("valid config");
    let features = variation_features(&variations, 0.05, &config.descriptor, 3).expect("features");
    let truth: Vec<usize> = variations.iter().map(|v| v.archetype).collect();

    for method in [
        PartitionMethod::BalancedGreedy,
        PartitionMethod::KmeansVanilla,
        PartitionMethod::Random,
    ] {
        let Ok((partition, projected)) = partition_features(&features, 4, method, 3, 2, CapacityRule::default())
        else {
            panic!("partitioning failed")
        };
        let of = partition.cluster_of();
        let found: Vec<usize> = variations.iter().map(|v| of[v.id.as_str()]).collect();
        println!(
            "{:<9} sizes {:?}  ARI {:.3}",
            method.as_str(),
            partition.sorted_sizes(),
            adjusted_rand_index(&truth, &found)
        );
        if let (Some(path), PartitionMethod::BalancedGreedy, Some(p)) =
            (std::env::args().nth(1), method, projected)
        {
            let file = std::fs::File::create(&path).expect("writable path");
            cluster_scatter_svg(&p, &partition, file).expect("svg");
            println!("scatter written to {path}");
        }
    }
}
