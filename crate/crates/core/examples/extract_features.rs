//! Point clouds in, shape descriptors out.
//!
//! Parses a tiny inline xyz cloud, then samples dense surface clouds for a
//! few simulator variations and prints the leading descriptor entries.

use taskpart::featex::extract_descriptor;
use taskpart::gslsim::{generate_variations, variation_surface_cloud, RunConfig};
use taskpart::pcio::{parse_point_cloud, sample_points, CloudFormat};
use taskpart::DescriptorSpec;

const TETRA: &str = "# corner of a unit cube\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n";

fn main() {
    let spec = DescriptorSpec::default();
    let cloud = parse_point_cloud(TETRA.as_bytes(), CloudFormat::Xyz, "tetra").expect("valid xyz");
    let d = extract_descriptor(&cloud, &spec, 0);
    println!("{}: {} points, {}-dim descriptor", d.id, cloud.len(), d.values.len());
    println!("  moment ratios {:.3?}", &d.values[..3]);

    let config = RunConfig {
        n_variations: 8,
        ..RunConfig::default()
    };
    for v in generate_variations(&config).expect("valid config").iter().take(4) {
        let dense = variation_surface_cloud(v, 10_000, 0.01, 7);
        let sampled = sample_points(&dense, 2_000, 7).expect("non-empty cloud");
        let d = extract_descriptor(&sampled, &spec, 7);
        println!(
            "{} (archetype {}, {} handle cells): ratios {:.3?}, d2 head {:.3?}",
            v.id,
            v.archetype,
            v.handle_cells.len(),
            &d.values[..3],
            &d.values[3..7]
        );
    }
}
