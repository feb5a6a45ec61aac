//! The three-phase loop: generalist, partitioned specialists, and
//! demonstration-guided fine-tuning of the generalist.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::cluster::{
    adjusted_rand_index, assign_balanced_greedy_with, assign_random, assign_vanilla, kmeans,
    optimal_balanced_assignment, KMeansParams, Partition, PartitionMethod,
};
use crate::evalrep::{select_low_performers, summarize, EvalStats};
use crate::featex::{extract_descriptor, DescriptorSpec, FeatureError, FeatureMatrix};
use crate::featproc::{l2_normalize, pca_fit, pca_transform, PcaModel};
use crate::rng::derive_seed;

use super::env::{generate_variations, variation_point_cloud, VariationSpec};
use super::learner::{
    collect_demos, evaluate, finetune_generalist, train, train_until_plateau, LearnerState,
    Trajectory,
};
use super::{RunConfig, SimError};

// Fixed offsets from the master seed, one per phase.
const PHASE1_STREAM: u64 = 1;
const CLOUD_STREAM: u64 = 2;
const DESCRIPTOR_STREAM: u64 = 3;
const PARTITION_STREAM: u64 = 4;
const SPECIALIST_STREAM: u64 = 5;
const DEMO_STREAM: u64 = 6;
const FINETUNE_STREAM: u64 = 7;
const EVAL_STREAM: u64 = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct SpecialistSummary {
    pub index: usize,
    pub members: Vec<String>,
    pub rates: BTreeMap<String, f64>,
    pub mean: f64,
    pub samples_used: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoReport {
    pub requested: usize,
    pub collected: usize,
    pub from_specialists: usize,
    pub from_generalist: usize,
    pub attempts: usize,
    /// Variations that yielded fewer demos than requested, with the missing count.
    pub shortfall: BTreeMap<String, usize>,
}

impl DemoReport {
    pub fn total_shortfall(&self) -> usize {
        self.shortfall.values().sum()
    }
}

/// Episodes spent per phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BudgetReport {
    pub phase1: u64,
    pub specialists: u64,
    pub finetune: u64,
}

/// Every intermediate artifact of one pipeline run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub config: RunConfig,
    pub method: PartitionMethod,
    pub variations: Vec<VariationSpec>,
    pub phase1_stats: EvalStats,
    pub selected: Vec<String>,
    /// Raw descriptors of all variations.
    pub features: FeatureMatrix,
    pub pca: PcaModel,
    /// Selected variations in PCA coordinates.
    pub projected: FeatureMatrix,
    pub partition: Partition,
    pub specialists: Vec<SpecialistSummary>,
    /// Each selected variation's rate under its own specialist.
    pub specialist_rates: BTreeMap<String, f64>,
    pub demos: DemoReport,
    pub final_stats: EvalStats,
    /// Agreement of the partition with the ground-truth archetypes.
    pub ari: f64,
    pub budget: BudgetReport,
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (s, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

impl RunResult {
    /// Mean over the selected variations of their specialist rates.
    pub fn specialist_mean(&self) -> f64 {
        mean(self.specialist_rates.values().copied())
    }

    pub fn phase1_selected_mean(&self) -> f64 {
        mean(self.selected.iter().map(|id| self.phase1_stats.per_variation[id]))
    }

    pub fn final_selected_mean(&self) -> f64 {
        mean(self.selected.iter().map(|id| self.final_stats.per_variation[id]))
    }

    /// Largest minus smallest per-specialist mean success.
    pub fn specialist_spread(&self) -> f64 {
        let means = self.specialists.iter().map(|s| s.mean);
        let hi = means.clone().fold(f64::NEG_INFINITY, f64::max);
        let lo = means.fold(f64::INFINITY, f64::min);
        hi - lo
    }
}

pub fn run_gsl_pipeline(config: &RunConfig, method: PartitionMethod) -> Result<RunResult, SimError> {
    run_gsl_pipeline_with_workers(config, method, 0)
}

/// Runs the pipeline on a pool of `workers` threads (0 picks automatically).
/// The result does not depend on the worker count.
pub fn run_gsl_pipeline_with_workers(
    config: &RunConfig,
    method: PartitionMethod,
    workers: usize,
) -> Result<RunResult, SimError> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(SimError::in_phase("setup"))?;
    pool.install(|| run(config, method))
}

fn evaluate_all(
    learner: &LearnerState,
    variations: &[VariationSpec],
    config: &RunConfig,
) -> BTreeMap<String, f64> {
    let eval_seed = derive_seed(config.master_seed, EVAL_STREAM);
    variations
        .par_iter()
        .enumerate()
        .map(|(i, v)| {
            let rate = evaluate(learner, v, config.eval_episodes, derive_seed(eval_seed, i as u64));
            (v.id.clone(), rate)
        })
        .collect()
}

/// Point cloud and descriptor for every variation, one row per variation id.
/// Cloud and descriptor streams derive from `seed` and the row index.
pub fn variation_features(
    variations: &[VariationSpec],
    noise_sigma: f64,
    descriptor: &DescriptorSpec,
    seed: u64,
) -> Result<FeatureMatrix, FeatureError> {
    let cloud_seed = derive_seed(seed, CLOUD_STREAM);
    let descriptor_seed = derive_seed(seed, DESCRIPTOR_STREAM);
    let rows = variations
        .par_iter()
        .enumerate()
        .map(|(i, v)| {
            let cloud = variation_point_cloud(v, noise_sigma, derive_seed(cloud_seed, i as u64));
            extract_descriptor(&cloud, descriptor, derive_seed(descriptor_seed, i as u64))
        })
        .collect();
    FeatureMatrix::new(rows)
}

fn run(config: &RunConfig, method: PartitionMethod) -> Result<RunResult, SimError> {
    let seed = config.master_seed;
    let variations = generate_variations(config)?;
    let index_of: BTreeMap<&str, usize> =
        variations.iter().enumerate().map(|(i, v)| (v.id.as_str(), i)).collect();
    let n_cells = config.grid * config.grid;

    // Phase 1: generalist on every variation.
    let fresh = LearnerState::new(n_cells, config.hyper);
    let phase1_seed = derive_seed(seed, PHASE1_STREAM);
    let generalist = if config.plateau_detection {
        train_until_plateau(
            &fresh,
            &variations,
            config.budget_phase1,
            config.plateau_window,
            config.plateau_threshold,
            phase1_seed,
            &config.rewards,
        )
    } else {
        train(&fresh, &variations, config.budget_phase1, phase1_seed, &config.rewards)
    }
    .map_err(SimError::in_phase("phase 1"))?;
    let phase1_stats =
        summarize(&evaluate_all(&generalist, &variations, config)).map_err(SimError::in_phase("phase 1"))?;

    let selected = select_low_performers(&phase1_stats.per_variation, config.n_low)
        .map_err(SimError::in_phase("selection"))?;
    if selected.len() < config.n_specialists {
        return Err(SimError::Phase {
            phase: "selection",
            source: format!(
                "{} low performers selected but {} specialists requested",
                selected.len(),
                config.n_specialists
            )
            .into(),
        });
    }

    // Features for every variation; the partition only sees the selected ones.
    let features = variation_features(&variations, config.feature_noise_sigma, &config.descriptor, seed)
        .map_err(SimError::in_phase("features"))?;
    let normalized = l2_normalize(&features).matrix;
    let selected_features = normalized.select(&selected).expect("selected ids come from the variations");
    let fit_on = if config.pca_fit_all { &normalized } else { &selected_features };
    let pca = pca_fit(fit_on, config.pca_k.min(fit_on.len()).min(fit_on.dim()))
        .map_err(SimError::in_phase("features"))?;
    let projected = pca_transform(&pca, &selected_features).map_err(SimError::in_phase("features"))?;

    let partition_seed = derive_seed(seed, PARTITION_STREAM);
    let k = config.n_specialists;
    let partition = if method.uses_features() {
        let mut params = KMeansParams::new(k, partition_seed);
        params.restarts = config.kmeans_restarts;
        params.max_iter = config.kmeans_max_iter;
        params.tol = config.kmeans_tol;
        let centroids = kmeans(&projected, &params).map_err(SimError::in_phase("partition"))?;
        match method {
            PartitionMethod::KmeansVanilla => assign_vanilla(&projected, &centroids),
            PartitionMethod::BalancedGreedy => {
                assign_balanced_greedy_with(&projected, &centroids, config.capacity_rule)
            }
            PartitionMethod::OptimalBalanced => optimal_balanced_assignment(&projected, &centroids),
            PartitionMethod::Random => unreachable!(),
        }
    } else {
        assign_random(&selected, k, partition_seed)
    }
    .map_err(SimError::in_phase("partition"))?;

    let cluster_of = partition.cluster_of();
    let truth: Vec<usize> = selected.iter().map(|id| variations[index_of[id.as_str()]].archetype).collect();
    let found: Vec<usize> = selected.iter().map(|id| cluster_of[id.as_str()]).collect();
    let ari = adjusted_rand_index(&truth, &found);

    // Phase 2: one specialist per cluster, cloned from the generalist.
    let trained: Vec<(usize, LearnerState)> = partition
        .clusters
        .par_iter()
        .enumerate()
        .filter(|(_, c)| !c.members.is_empty())
        .map(|(c, cluster)| {
            let members: Vec<VariationSpec> =
                cluster.members.iter().map(|id| variations[index_of[id.as_str()]].clone()).collect();
            let mut start = generalist.clone();
            if let Some(e) = config.specialist_epsilon {
                start.hyper.epsilon = e;
            }
            let stream = derive_seed(seed ^ c as u64, SPECIALIST_STREAM);
            train(&start, &members, config.budget_specialist, stream, &config.rewards).map(|l| (c, l))
        })
        .collect::<Result<_, _>>()
        .map_err(SimError::in_phase("phase 2"))?;
    let mut specialist_of: BTreeMap<usize, &LearnerState> = BTreeMap::new();
    for (c, l) in &trained {
        specialist_of.insert(*c, l);
    }

    let eval_seed = derive_seed(seed, EVAL_STREAM);
    let specialist_rates: BTreeMap<String, f64> = selected
        .par_iter()
        .map(|id| {
            let i = index_of[id.as_str()];
            let learner = specialist_of[&cluster_of[id.as_str()]];
            let rate = evaluate(learner, &variations[i], config.eval_episodes, derive_seed(eval_seed, i as u64));
            (id.clone(), rate)
        })
        .collect();
    let specialists: Vec<SpecialistSummary> = partition
        .clusters
        .iter()
        .enumerate()
        .map(|(c, cluster)| {
            let rates: BTreeMap<String, f64> =
                cluster.members.iter().map(|id| (id.clone(), specialist_rates[id])).collect();
            SpecialistSummary {
                index: c,
                members: cluster.members.clone(),
                mean: mean(rates.values().copied()),
                rates,
                samples_used: specialist_of
                    .get(&c)
                    .map_or(0, |l| l.samples_used - generalist.samples_used),
            }
        })
        .collect();

    // Phase 3: demonstrations from specialists (selected) and the generalist
    // (the rest), then fine-tuning the generalist on all variations.
    let demo_seed = derive_seed(seed, DEMO_STREAM);
    let count = config.demos_per_variation;
    let batches: Vec<_> = variations
        .par_iter()
        .enumerate()
        .map(|(i, v)| {
            let source = cluster_of
                .get(v.id.as_str())
                .map_or(&generalist, |c| specialist_of[c]);
            let batch = collect_demos(
                source,
                v,
                count,
                derive_seed(demo_seed, i as u64),
                config.success_only,
                config.max_attempts_factor * count,
            );
            (cluster_of.contains_key(v.id.as_str()), batch)
        })
        .collect();
    let mut demos: Vec<Trajectory> = Vec::with_capacity(count * variations.len());
    let mut report = DemoReport {
        requested: count * variations.len(),
        collected: 0,
        from_specialists: 0,
        from_generalist: 0,
        attempts: 0,
        shortfall: BTreeMap::new(),
    };
    for ((from_specialist, batch), v) in batches.into_iter().zip(&variations) {
        let got = batch.trajectories.len();
        if from_specialist {
            report.from_specialists += got;
        } else {
            report.from_generalist += got;
        }
        report.attempts += batch.attempts;
        if batch.shortfall() > 0 {
            report.shortfall.insert(v.id.clone(), batch.shortfall());
        }
        demos.extend(batch.trajectories);
    }
    report.collected = demos.len();

    let tuned = finetune_generalist(
        &generalist,
        &demos,
        &variations,
        config.budget_finetune,
        derive_seed(seed, FINETUNE_STREAM),
        &config.rewards,
        config.bc_margin,
    )
    .map_err(SimError::in_phase("phase 3"))?;
    let final_stats =
        summarize(&evaluate_all(&tuned, &variations, config)).map_err(SimError::in_phase("phase 3"))?;

    let budget = BudgetReport {
        phase1: generalist.samples_used,
        specialists: specialists.iter().map(|s| s.samples_used).sum(),
        finetune: tuned.samples_used - generalist.samples_used,
    };

    Ok(RunResult {
        config: config.clone(),
        method,
        variations,
        phase1_stats,
        selected,
        features,
        pca,
        projected,
        partition,
        specialists,
        specialist_rates,
        demos: report,
        final_stats,
        ari,
        budget,
    })
}
