//! Tabular Q-learning over the variation-blind state (the agent's cell).

use std::collections::HashMap;

use rand::seq::IndexedRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::rng::{seeded, Rng};

use super::env::{Action, Rewards, VariationSpec, N_ACTIONS};
use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyper {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub epsilon_decay: f64,
    /// Initial value of every Q entry.
    pub q_init: f64,
}

impl Default for Hyper {
    fn default() -> Self {
        Self {
            alpha: 0.03,
            gamma: 0.95,
            epsilon: 0.3,
            epsilon_decay: 0.9999,
            q_init: 0.0,
        }
    }
}

/// Episodes granted to one training call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingBudget {
    pub n_sample: u64,
}

impl TrainingBudget {
    pub fn episodes(n_sample: u64) -> Self {
        Self { n_sample }
    }
}

/// A generalist or specialist policy: one row of action values per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerState {
    pub q: Vec<[f64; N_ACTIONS]>,
    pub hyper: Hyper,
    pub samples_used: u64,
}

impl LearnerState {
    pub fn new(n_cells: usize, hyper: Hyper) -> Self {
        Self {
            q: vec![[hyper.q_init; N_ACTIONS]; n_cells],
            hyper,
            samples_used: 0,
        }
    }

    /// Greedy action; ties go to the lowest action index.
    pub fn greedy(&self, state: usize) -> Action {
        let row = &self.q[state];
        let mut best = 0;
        for a in 1..N_ACTIONS {
            if row[a] > row[best] {
                best = a;
            }
        }
        Action::from_index(best)
    }

    fn max_value(&self, state: usize) -> f64 {
        self.q[state].iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    fn explore(&self, state: usize, rng: &mut Rng) -> Action {
        if rng.random::<f64>() < self.hyper.epsilon {
            Action::from_index(rng.random_range(0..N_ACTIONS))
        } else {
            self.greedy(state)
        }
    }
}

/// Demo-majority action per visited cell, used as a shaping target.
pub(crate) type DemoPolicy = HashMap<usize, Action>;

pub(crate) fn run_episode(
    learner: &mut LearnerState,
    v: &VariationSpec,
    rewards: &Rewards,
    shaping: Option<&DemoPolicy>,
    rng: &mut Rng,
) -> bool {
    let free = v.free_cells();
    let mut state = *free.choose(rng).expect("grid has free cells");
    let gamma = learner.hyper.gamma;
    let alpha = learner.hyper.alpha;
    for _ in 0..v.max_steps {
        let action = learner.explore(state, rng);
        let out = v.step(state, action, rewards, rng);
        let mut reward = out.reward;
        if let Some(demo) = shaping {
            if demo.get(&state) == Some(&action) {
                reward += rewards.demo_shaping;
            }
        }
        let target = if out.done {
            reward
        } else {
            reward + gamma * learner.max_value(out.next)
        };
        let q = &mut learner.q[state][action.index()];
        *q += alpha * (target - *q);
        if out.done {
            return out.success;
        }
        state = out.next;
    }
    false
}

pub(crate) fn train_inner(
    mut learner: LearnerState,
    variations: &[VariationSpec],
    episodes: u64,
    seed: u64,
    rewards: &Rewards,
    shaping: Option<&DemoPolicy>,
    mut stop: impl FnMut(bool) -> bool,
) -> Result<LearnerState, SimError> {
    if variations.is_empty() {
        return Err(SimError::InvalidBudget("no variations to train on".into()));
    }
    let n_cells = variations[0].n_cells();
    if learner.q.len() != n_cells || variations.iter().any(|v| v.n_cells() != n_cells) {
        return Err(SimError::InvalidConfig("learner and variations disagree on grid size".into()));
    }
    let mut rng = seeded(seed);
    for _ in 0..episodes {
        let v = variations.choose(&mut rng).expect("non-empty");
        let success = run_episode(&mut learner, v, rewards, shaping, &mut rng);
        learner.hyper.epsilon = (learner.hyper.epsilon * learner.hyper.epsilon_decay).clamp(0.0, 1.0);
        learner.samples_used += 1;
        if stop(success) {
            break;
        }
    }
    Ok(learner)
}

/// Runs `budget.n_sample` epsilon-greedy Q-learning episodes, each on a
/// variation drawn uniformly from `variations`.
pub fn train(
    learner: &LearnerState,
    variations: &[VariationSpec],
    budget: TrainingBudget,
    seed: u64,
    rewards: &Rewards,
) -> Result<LearnerState, SimError> {
    if budget.n_sample == 0 {
        return Ok(learner.clone());
    }
    train_inner(learner.clone(), variations, budget.n_sample, seed, rewards, None, |_| false)
}

/// Like [`train`] but stops early once the success rate of consecutive
/// `window`-episode blocks changes by less than `threshold`.
pub fn train_until_plateau(
    learner: &LearnerState,
    variations: &[VariationSpec],
    max_budget: TrainingBudget,
    window: usize,
    threshold: f64,
    seed: u64,
    rewards: &Rewards,
) -> Result<LearnerState, SimError> {
    if max_budget.n_sample == 0 {
        return Ok(learner.clone());
    }
    if window == 0 {
        return Err(SimError::InvalidBudget("plateau window must be positive".into()));
    }
    let mut in_window = 0usize;
    let mut successes = 0usize;
    let mut previous: Option<f64> = None;
    train_inner(
        learner.clone(),
        variations,
        max_budget.n_sample,
        seed,
        rewards,
        None,
        |success| {
            in_window += 1;
            successes += usize::from(success);
            if in_window < window {
                return false;
            }
            let rate = successes as f64 / window as f64;
            let done = previous.is_some_and(|p| (rate - p).abs() < threshold);
            previous = Some(rate);
            in_window = 0;
            successes = 0;
            done
        },
    )
}

/// Greedy rollout from `start`; returns the visited (cell, action, reward)
/// steps and whether the handle was turned correctly.
fn greedy_rollout(
    learner: &LearnerState,
    v: &VariationSpec,
    start: usize,
    rewards: &Rewards,
    rng: &mut Rng,
) -> (Vec<(usize, Action, f64)>, bool) {
    let mut state = start;
    let mut steps = Vec::new();
    for _ in 0..v.max_steps {
        let action = learner.greedy(state);
        let out = v.step(state, action, rewards, rng);
        steps.push((state, action, out.reward));
        if out.done {
            return (steps, out.success);
        }
        state = out.next;
    }
    (steps, false)
}

/// Fraction of successful greedy rollouts from uniformly random free cells.
pub fn evaluate(learner: &LearnerState, v: &VariationSpec, episodes: usize, seed: u64) -> f64 {
    assert!(episodes > 0, "evaluation needs at least one episode");
    let rewards = Rewards::default();
    let free = v.free_cells();
    let mut rng = seeded(seed);
    let wins = (0..episodes)
        .filter(|_| {
            let start = *free.choose(&mut rng).expect("grid has free cells");
            greedy_rollout(learner, v, start, &rewards, &mut rng).1
        })
        .count();
    wins as f64 / episodes as f64
}

/// Per-step record of a demonstration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoStep {
    pub cell: usize,
    pub action: Action,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub variation_id: String,
    pub steps: Vec<DemoStep>,
    pub success: bool,
}

/// Demonstrations for one variation plus attempt accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct DemoBatch {
    pub trajectories: Vec<Trajectory>,
    pub requested: usize,
    pub attempts: usize,
}

impl DemoBatch {
    pub fn shortfall(&self) -> usize {
        self.requested - self.trajectories.len()
    }
}

pub fn collect_demos(
    learner: &LearnerState,
    v: &VariationSpec,
    count: usize,
    seed: u64,
    success_only: bool,
    max_attempts: usize,
) -> DemoBatch {
    let rewards = Rewards::default();
    let free = v.free_cells();
    let mut rng = seeded(seed);
    let mut trajectories = Vec::with_capacity(count);
    let mut attempts = 0;
    while trajectories.len() < count && attempts < max_attempts.max(count) {
        attempts += 1;
        let start = *free.choose(&mut rng).expect("grid has free cells");
        let (steps, success) = greedy_rollout(learner, v, start, &rewards, &mut rng);
        if success_only && !success {
            continue;
        }
        trajectories.push(Trajectory {
            variation_id: v.id.clone(),
            steps: steps
                .into_iter()
                .map(|(cell, action, reward)| DemoStep { cell, action, reward })
                .collect(),
            success,
        });
    }
    DemoBatch {
        trajectories,
        requested: count,
        attempts,
    }
}

/// Majority demonstrated action per visited cell; ties go to the action that
/// was seen first at that cell.
pub(crate) fn demo_policy(demos: &[Trajectory]) -> DemoPolicy {
    let mut counts: HashMap<usize, Vec<(Action, usize)>> = HashMap::new();
    for step in demos.iter().flat_map(|t| &t.steps) {
        let seen = counts.entry(step.cell).or_default();
        match seen.iter_mut().find(|(a, _)| *a == step.action) {
            Some((_, c)) => *c += 1,
            None => seen.push((step.action, 1)),
        }
    }
    counts
        .into_iter()
        .map(|(cell, seen)| {
            let mut best = seen[0];
            for &(a, c) in &seen[1..] {
                if c > best.1 {
                    best = (a, c);
                }
            }
            (cell, best.0)
        })
        .collect()
}

/// Demonstration-guided fine-tuning: behaviour cloning onto the Q table,
/// then Q-learning over all variations with a shaping bonus for following
/// the demonstrated action.
pub fn finetune_generalist(
    generalist: &LearnerState,
    demos: &[Trajectory],
    variations: &[VariationSpec],
    budget: TrainingBudget,
    seed: u64,
    rewards: &Rewards,
    bc_margin: f64,
) -> Result<LearnerState, SimError> {
    let policy = demo_policy(demos);
    let mut learner = generalist.clone();
    let mut cells: Vec<&usize> = policy.keys().collect();
    cells.sort_unstable();
    for &cell in cells {
        let target = policy[&cell].index();
        let row = &mut learner.q[cell];
        let best_other = (0..N_ACTIONS)
            .filter(|&a| a != target)
            .map(|a| row[a])
            .fold(f64::NEG_INFINITY, f64::max);
        if row[target] <= best_other {
            row[target] = best_other + bc_margin;
        }
    }
    if budget.n_sample == 0 {
        return Ok(learner);
    }
    train_inner(learner, variations, budget.n_sample, seed, rewards, Some(&policy), |_| false)
}
