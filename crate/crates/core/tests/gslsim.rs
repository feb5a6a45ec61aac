use taskpart::evalrep::LowRule;
use taskpart::gslsim::{
    evaluate, generate_variations, run_gsl_pipeline, train, variation_point_cloud, Hyper, LearnerState, Rewards,
    RunConfig, SimError, TrainingBudget, VariationSpec,
};
use taskpart::PartitionMethod;

fn family(n: usize, seed: u64) -> Vec<VariationSpec> {
    generate_variations(&RunConfig { n_variations: n, master_seed: seed, ..RunConfig::default() }).unwrap()
}

fn small_config(seed: u64) -> RunConfig {
    RunConfig {
        n_variations: 8,
        n_specialists: 2,
        budget_phase1: TrainingBudget::episodes(400),
        budget_specialist: TrainingBudget::episodes(200),
        budget_finetune: TrainingBudget::episodes(100),
        demos_per_variation: 3,
        eval_episodes: 20,
        n_low: LowRule::WorstN(4),
        master_seed: seed,
        ..RunConfig::default()
    }
}

fn solo(v: &VariationSpec, episodes: u64, seed: u64) -> LearnerState {
    let fresh = LearnerState::new(v.n_cells(), Hyper::default());
    train(&fresh, std::slice::from_ref(v), TrainingBudget::episodes(episodes), seed, &Rewards::default()).unwrap()
}

#[test]
fn default_family_layout() {
    let vs = family(60, 0);
    assert_eq!(vs.len(), 60);
    for (i, v) in vs.iter().enumerate() {
        assert_eq!(v.archetype, i % 4);
        assert_eq!(v.id, format!("v{i:02}"));
        assert_eq!(v.grid, 9);
    }
    let counts = RunConfig { n_variations: 10, archetype_counts: Some(vec![1, 2, 3, 4]), ..RunConfig::default() };
    let labels: Vec<usize> = generate_variations(&counts).unwrap().iter().map(|v| v.archetype).collect();
    assert_eq!(labels, vec![0, 1, 1, 2, 2, 2, 3, 3, 3, 3]);
}

#[test]
fn jitter_stays_within_one_cell() {
    let base = family(4, 0);
    let mut offsets = std::collections::BTreeSet::new();
    for seed in 0..100 {
        for v in family(40, seed) {
            let anchor = &base[v.archetype].handle_cells;
            // archetypes 0..4 appear once in the 4-variation family, so no jitter there
            let dx = v.handle_cells[0].0 as i64 - anchor[0].0 as i64;
            let dy = v.handle_cells[0].1 as i64 - anchor[0].1 as i64;
            assert!((0..=1).contains(&dx) && (0..=1).contains(&dy));
            for (c, a) in v.handle_cells.iter().zip(anchor) {
                assert_eq!((c.0 as i64 - a.0 as i64, c.1 as i64 - a.1 as i64), (dx, dy));
                assert!(c.0 < v.grid && c.1 < v.grid);
            }
            offsets.insert((dx, dy));
        }
    }
    assert_eq!(offsets.len(), 4);
}

#[test]
fn clouds_are_seeded() {
    let v = &family(4, 0)[1];
    assert_eq!(variation_point_cloud(v, 0.05, 3), variation_point_cloud(v, 0.05, 3));
    assert_ne!(variation_point_cloud(v, 0.05, 3), variation_point_cloud(v, 0.05, 4));
    let clean = variation_point_cloud(v, 0.0, 9);
    assert_eq!(clean.len(), v.handle_cells.len());
    assert_eq!(clean, variation_point_cloud(v, 0.0, 10));
}

#[test]
fn single_variation_is_learnable() {
    let v = &family(4, 0)[0];
    let mut rates: Vec<f64> = (0..10).map(|s| evaluate(&solo(v, 5000, s), v, 100, 1000 + s)).collect();
    rates.sort_by(f64::total_cmp);
    let median = (rates[4] + rates[5]) / 2.0;
    assert!(median >= 0.95, "{rates:?}");
}

#[test]
fn conflicting_pairs_are_harder() {
    let vs = family(60, 0);
    let pair_mean = |pair: [&VariationSpec; 2], seed: u64| {
        let fresh = LearnerState::new(pair[0].n_cells(), Hyper::default());
        let pair: Vec<VariationSpec> = pair.into_iter().cloned().collect();
        let l = train(&fresh, &pair, TrainingBudget::episodes(3000), seed, &Rewards::default()).unwrap();
        pair.iter().map(|v| evaluate(&l, v, 100, seed)).sum::<f64>() / 2.0
    };
    let mut wins = 0;
    for seed in 0..10u64 {
        let a = (seed % 4) as usize;
        let b = (a + 2) % 4;
        let same = pair_mean([&vs[a], &vs[a + 4]], seed);
        let mixed = pair_mean([&vs[a], &vs[b]], seed);
        wins += usize::from(same >= mixed);
    }
    assert!(wins >= 8, "{wins}/10");
}

#[test]
fn budget_accounting() {
    let cfg = small_config(1);
    let r = run_gsl_pipeline(&cfg, PartitionMethod::BalancedGreedy).unwrap();
    assert_eq!(r.budget.phase1, 400);
    assert_eq!(r.budget.specialists, 2 * 200);
    assert_eq!(r.budget.finetune, 100);
    assert!(r.specialists.iter().all(|s| s.samples_used == 200));
    assert_eq!(r.demos.requested, 8 * 3);
    assert_eq!(r.demos.collected, r.demos.from_specialists + r.demos.from_generalist);
    assert_eq!(r.demos.collected + r.demos.total_shortfall(), r.demos.requested);
    assert_eq!(r.final_stats.per_variation.len(), 8);
    assert_eq!(r.specialist_rates.len(), r.selected.len());
}

#[test]
fn zero_budgets_clone_the_generalist() {
    let cfg = RunConfig {
        budget_specialist: TrainingBudget::episodes(0),
        budget_finetune: TrainingBudget::episodes(0),
        specialist_epsilon: None,
        bc_margin: 0.0,
        demos_per_variation: 0,
        ..small_config(2)
    };
    let r = run_gsl_pipeline(&cfg, PartitionMethod::Random).unwrap();
    assert_eq!(r.budget.specialists, 0);
    assert_eq!(r.budget.finetune, 0);
    for id in &r.selected {
        assert_eq!(r.specialist_rates[id], r.phase1_stats.per_variation[id]);
    }
    assert_eq!(r.final_stats, r.phase1_stats);
}

#[test]
fn forced_singletons() {
    let cfg = RunConfig { n_variations: 4, n_specialists: 4, n_low: LowRule::WorstN(4), ..small_config(3) };
    for method in [PartitionMethod::BalancedGreedy, PartitionMethod::KmeansVanilla, PartitionMethod::Random] {
        let r = run_gsl_pipeline(&cfg, method).unwrap();
        assert_eq!(r.selected.len(), 4);
        if method != PartitionMethod::KmeansVanilla {
            assert_eq!(r.partition.sizes(), vec![1; 4]);
        }
    }
}

#[test]
fn errors_name_their_phase() {
    let cfg = RunConfig { n_specialists: 6, n_low: LowRule::BelowMedian, ..small_config(0) };
    let err = run_gsl_pipeline(&cfg, PartitionMethod::BalancedGreedy).unwrap_err();
    assert_eq!(err.phase(), Some("selection"));
    assert!(err.to_string().starts_with("selection failed"));
    let bad = RunConfig { n_specialists: 9, ..small_config(0) };
    assert!(matches!(run_gsl_pipeline(&bad, PartitionMethod::Random), Err(SimError::InvalidConfig(_))));
}

#[test]
fn runs_are_reproducible() {
    let cfg = small_config(5);
    let a = run_gsl_pipeline(&cfg, PartitionMethod::BalancedGreedy).unwrap();
    let b = run_gsl_pipeline(&cfg, PartitionMethod::BalancedGreedy).unwrap();
    assert_eq!(a, b);
}
