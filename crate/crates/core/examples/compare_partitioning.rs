//! Balanced feature clusters versus random splits for one seed, rendered as
//! the comparison table.

use taskpart::evalrep::{comparison_table, summarize, ComparisonRow};
use taskpart::gslsim::{run_gsl_pipeline, RunConfig};
use taskpart::PartitionMethod;

fn main() {
    let seed = std::env::args().nth(1).map_or(0, |s| s.parse().expect("seed"));
    let config = RunConfig {
        master_seed: seed,
        ..RunConfig::default()
    };
    let runs = [
        ("balanced", 4, PartitionMethod::BalancedGreedy),
        ("random", 4, PartitionMethod::Random),
        ("random", 8, PartitionMethod::Random),
    ];
    let mut rows = Vec::new();
    for (label, k, method) in runs {
        let cfg = RunConfig {
            n_specialists: k,
            ..config.clone()
        };
        let r = run_gsl_pipeline(&cfg, method).expect("pipeline run");
        if rows.is_empty() {
            let phase1 = r.selected.iter().map(|id| (id.clone(), r.phase1_stats.per_variation[id])).collect();
            rows.push(ComparisonRow {
                label: "generalist".into(),
                n_specialists: None,
                stats: summarize(&phase1).unwrap(),
            });
        }
        rows.push(ComparisonRow {
            label: format!("{label} specialists"),
            n_specialists: Some(k),
            stats: summarize(&r.specialist_rates).unwrap(),
        });
    }
    print!("{}", comparison_table(&rows).unwrap().markdown);
}
