//! Desk-scale surrogate of the generalist-specialist loop: a family of
//! gridworld variations, tabular learners, demonstrations and fine-tuning.

pub mod env;
pub mod learner;
pub mod pipeline;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::CapacityRule;
use crate::evalrep::LowRule;
use crate::featex::DescriptorSpec;

pub use env::{
    generate_variations, variation_point_cloud, variation_surface_cloud, Action, Interaction,
    Rewards, VariationSpec,
};
pub use learner::{
    collect_demos, evaluate, finetune_generalist, train, train_until_plateau, DemoBatch, DemoStep,
    Hyper, LearnerState, TrainingBudget, Trajectory,
};
pub use pipeline::{
    run_gsl_pipeline, run_gsl_pipeline_with_workers, variation_features, RunResult, SpecialistSummary,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("invalid budget: {0}")]
    InvalidBudget(String),
    #[error("{phase} failed: {source}")]
    Phase {
        phase: &'static str,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
    },
}

impl SimError {
    pub(crate) fn in_phase<E>(phase: &'static str) -> impl FnOnce(E) -> SimError
    where
        E: std::error::Error + Send + Sync + 'static,
    {
        move |e| SimError::Phase {
            phase,
            source: Box::new(e),
        }
    }

    /// Phase name for errors raised inside a pipeline phase.
    pub fn phase(&self) -> Option<&'static str> {
        match self {
            SimError::Phase { phase, .. } => Some(phase),
            _ => None,
        }
    }
}

/// Every knob of one pipeline run. Absent JSON fields take the defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub n_variations: usize,
    pub g_archetypes: usize,
    pub archetype_counts: Option<Vec<usize>>,
    pub grid: usize,
    pub max_steps: usize,
    pub n_low: LowRule,
    pub n_specialists: usize,
    pub budget_phase1: TrainingBudget,
    pub budget_specialist: TrainingBudget,
    pub budget_finetune: TrainingBudget,
    pub demos_per_variation: usize,
    pub eval_episodes: usize,
    pub master_seed: u64,
    pub feature_noise_sigma: f64,
    pub hyper: Hyper,
    /// Epsilon each specialist restarts from after cloning.
    pub specialist_epsilon: Option<f64>,
    pub rewards: Rewards,
    pub bc_margin: f64,
    pub descriptor: DescriptorSpec,
    pub pca_k: usize,
    /// Fit PCA on all variations instead of only the selected ones.
    pub pca_fit_all: bool,
    pub kmeans_restarts: usize,
    pub kmeans_max_iter: usize,
    pub kmeans_tol: f64,
    pub capacity_rule: CapacityRule,
    pub success_only: bool,
    pub max_attempts_factor: usize,
    pub plateau_detection: bool,
    pub plateau_window: usize,
    pub plateau_threshold: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n_variations: 60,
            g_archetypes: 4,
            archetype_counts: None,
            grid: 9,
            max_steps: 30,
            n_low: LowRule::BelowMedian,
            n_specialists: 4,
            budget_phase1: TrainingBudget::episodes(3000),
            budget_specialist: TrainingBudget::episodes(3000),
            budget_finetune: TrainingBudget::episodes(1000),
            demos_per_variation: 10,
            eval_episodes: 100,
            master_seed: 0,
            feature_noise_sigma: 0.05,
            hyper: Hyper::default(),
            specialist_epsilon: Some(0.3),
            rewards: Rewards::default(),
            bc_margin: 0.05,
            descriptor: DescriptorSpec::default(),
            pca_k: 2,
            pca_fit_all: false,
            kmeans_restarts: 10,
            kmeans_max_iter: 300,
            kmeans_tol: 1e-8,
            capacity_rule: CapacityRule::default(),
            success_only: true,
            max_attempts_factor: 20,
            plateau_detection: false,
            plateau_window: 200,
            plateau_threshold: 0.005,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        if self.n_specialists == 0 {
            return bad("n_specialists must be positive".into());
        }
        if self.n_specialists > self.n_variations {
            return bad(format!(
                "n_specialists ({}) exceeds n_variations ({})",
                self.n_specialists, self.n_variations
            ));
        }
        if let LowRule::WorstN(n) = self.n_low {
            if n < self.n_specialists || n > self.n_variations {
                return bad(format!(
                    "n_low ({n}) must lie between n_specialists ({}) and n_variations ({})",
                    self.n_specialists, self.n_variations
                ));
            }
        }
        if self.eval_episodes == 0 {
            return bad("eval_episodes must be positive".into());
        }
        if self.pca_k == 0 {
            return bad("pca_k must be positive".into());
        }
        if !(self.feature_noise_sigma >= 0.0 && self.feature_noise_sigma.is_finite()) {
            return bad("feature_noise_sigma must be a non-negative real".into());
        }
        let h = &self.hyper;
        if !(0.0..=1.0).contains(&h.epsilon) || !(0.0..=1.0).contains(&h.epsilon_decay) {
            return bad("epsilon and epsilon_decay must lie in [0, 1]".into());
        }
        if let Some(e) = self.specialist_epsilon {
            if !(0.0..=1.0).contains(&e) {
                return bad("specialist_epsilon must lie in [0, 1]".into());
            }
        }
        if self.plateau_detection && self.plateau_window == 0 {
            return bad("plateau_window must be positive".into());
        }
        Ok(())
    }
}
