//! One full generalist / specialists / fine-tune run with the default
//! desk-scale config, persisted to a directory.
//!
//! cargo run --release --example gsl_pipeline -- [out_dir]

use std::path::PathBuf;

use taskpart::evalrep::{format_percent, persist_run, verify_manifest};
use taskpart::gslsim::{run_gsl_pipeline, RunConfig};
use taskpart::PartitionMethod;

fn main() {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("taskpart-gsl-run"));
    let config = RunConfig::default();
    let result = run_gsl_pipeline(&config, PartitionMethod::BalancedGreedy).expect("pipeline run");

    println!("phase 1 average   {}", format_percent(result.phase1_stats.average));
    println!("selected          {} variations below the median", result.selected.len());
    println!("cluster sizes     {:?}", result.partition.sorted_sizes());
    for s in &result.specialists {
        println!("  specialist {} on {:2} variations: {}", s.index, s.members.len(), format_percent(s.mean));
    }
    println!("demos             {} collected, shortfall {}", result.demos.collected, result.demos.total_shortfall());
    println!(
        "selected set      phase 1 {} -> fine-tuned {}",
        format_percent(result.phase1_selected_mean()),
        format_percent(result.final_selected_mean())
    );
    println!("final average     {}", format_percent(result.final_stats.average));

    persist_run(&result, &out).expect("writable output directory");
    let manifest = verify_manifest(&out).expect("fresh run verifies");
    println!("wrote {} files to {}", manifest.files.len(), out.display());
}
