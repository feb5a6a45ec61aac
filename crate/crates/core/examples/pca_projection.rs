//! Fit a PCA on simulator descriptors and show how much variance the first
//! two components keep.

use taskpart::featproc::{l2_normalize, pca_fit, pca_transform};
use taskpart::gslsim::{generate_variations, variation_features, RunConfig};

fn main() {
    let config = RunConfig {
        n_variations: 32,
        ..RunConfig::default()
    };
    let variations = generate_variations(&config).expect("valid config");
    let features = variation_features(&variations, 0.05, &config.descriptor, 0).expect("features");
    let normalized = l2_normalize(&features).matrix;

    let full = pca_fit(&normalized, 8).expect("pca");
    let total: f64 = full.eigenvalues.iter().sum();
    let mut kept = 0.0;
    for (i, ev) in full.eigenvalues.iter().enumerate() {
        kept += ev;
        println!("pc{}: eigenvalue {ev:.5}  cumulative {:.1}% of top 8", i + 1, 100.0 * kept / total);
    }

    let model = pca_fit(&normalized, 2).expect("pca");
    let projected = pca_transform(&model, &normalized).expect("same dimension");
    for (v, row) in variations.iter().zip(projected.rows()).take(8) {
        println!("{} archetype {} -> ({:+.3}, {:+.3})", v.id, v.archetype, row.values[0], row.values[1]);
    }
}
