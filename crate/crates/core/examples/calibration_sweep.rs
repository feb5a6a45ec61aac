//! Seeds 0-9 of the desk-scale comparisons: balanced vs random at four
//! specialists, random at eight, vanilla vs balanced on unequal archetype
//! counts, and the fine-tuning gain.
//!
//! Optional argument: a JSON file with RunConfig overrides.

use std::time::Instant;

use taskpart::gslsim::{run_gsl_pipeline, RunConfig};
use taskpart::PartitionMethod;

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn main() {
    let base = match std::env::args().nth(1) {
        Some(path) => RunConfig::from_json(&std::fs::read_to_string(path).unwrap()).unwrap(),
        None => RunConfig::default(),
    };
    let seeds = 0..10u64;
    let t = Instant::now();
    let (mut bal, mut rnd, mut rnd8, mut gain, mut p1) = (vec![], vec![], vec![], vec![], vec![]);
    let mut wins = 0;
    for s in seeds.clone() {
        let cfg = RunConfig { master_seed: s, ..base.clone() };
        let b = run_gsl_pipeline(&cfg, PartitionMethod::BalancedGreedy).unwrap();
        let r = run_gsl_pipeline(&cfg, PartitionMethod::Random).unwrap();
        let r8 = run_gsl_pipeline(&RunConfig { n_specialists: 8, ..cfg.clone() }, PartitionMethod::Random).unwrap();
        wins += usize::from(b.specialist_mean() > r.specialist_mean());
        bal.push(b.specialist_mean());
        rnd.push(r.specialist_mean());
        rnd8.push(r8.specialist_mean());
        p1.push(b.phase1_selected_mean());
        gain.push(b.final_selected_mean() - b.phase1_selected_mean());
        println!(
            "seed {s}: selected {:2} ari {:.2} phase1 all {:.3} sel {:.3} | balanced {:.3} random {:.3} random8 {:.3} | final sel {:.3} shortfall {}",
            b.selected.len(),
            b.ari,
            b.phase1_stats.average,
            b.phase1_selected_mean(),
            b.specialist_mean(),
            r.specialist_mean(),
            r8.specialist_mean(),
            b.final_selected_mean(),
            b.demos.total_shortfall()
        );
    }
    println!(
        "balanced {:.3} random {:.3} (diff {:+.3}, wins {wins}/10) random8 {:.3} (diff {:+.3}) finetune gain {:+.3} phase1 sel {:.3}",
        mean(&bal),
        mean(&rnd),
        mean(&bal) - mean(&rnd),
        mean(&rnd8),
        mean(&rnd8) - mean(&bal),
        mean(&gain),
        mean(&p1)
    );

    let (mut vs, mut bs, mut spread, mut imb) = (vec![], vec![], vec![], vec![]);
    for s in seeds {
        let cfg = RunConfig {
            master_seed: s,
            n_variations: 29,
            archetype_counts: Some(vec![4, 6, 9, 10]),
            n_low: taskpart::evalrep::LowRule::WorstN(29),
            ..base.clone()
        };
        let v = run_gsl_pipeline(&cfg, PartitionMethod::KmeansVanilla).unwrap();
        let b = run_gsl_pipeline(&cfg, PartitionMethod::BalancedGreedy).unwrap();
        println!(
            "unequal seed {s}: vanilla sizes {:?} spread {:.3} mean {:.3} | balanced sizes {:?} mean {:.3}",
            v.partition.sorted_sizes(),
            v.specialist_spread(),
            v.specialist_mean(),
            b.partition.sorted_sizes(),
            b.specialist_mean()
        );
        vs.push(v.specialist_mean());
        bs.push(b.specialist_mean());
        spread.push(v.specialist_spread());
        imb.push(v.partition.imbalance() as f64);
    }
    println!(
        "vanilla mean {:.3} balanced mean {:.3} vanilla spread {:.3} imbalance {:.1}; elapsed {:.1?}",
        mean(&vs),
        mean(&bs),
        mean(&spread),
        mean(&imb),
        t.elapsed()
    );
}
