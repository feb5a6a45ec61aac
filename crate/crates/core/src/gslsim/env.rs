//! Gridworld task family. Each variation places a handle (a small set of
//! cells) in its archetype's home corner and requires a specific turning
//! direction. The learner only ever sees its own cell.

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::pcio::PointCloud;
use crate::rng::{derive_seed, seeded, Rng};

use super::{RunConfig, SimError};

pub const N_ACTIONS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
    InteractCw,
    InteractCcw,
}

impl Action {
    pub const ALL: [Action; N_ACTIONS] = [
        Action::Up,
        Action::Down,
        Action::Left,
        Action::Right,
        Action::InteractCw,
        Action::InteractCcw,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Action {
        Action::ALL[i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interaction {
    Cw,
    Ccw,
}

impl Interaction {
    pub fn action(self) -> Action {
        match self {
            Interaction::Cw => Action::InteractCw,
            Interaction::Ccw => Action::InteractCcw,
        }
    }
}

/// Reward constants of the task family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Rewards {
    pub step: f64,
    pub success: f64,
    pub wrong_interaction: f64,
    pub demo_shaping: f64,
}

impl Default for Rewards {
    fn default() -> Self {
        Self {
            step: -0.01,
            success: 1.0,
            wrong_interaction: -0.05,
            demo_shaping: 0.05,
        }
    }
}

pub type Cell = (usize, usize);

/// One concrete task instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationSpec {
    pub id: String,
    pub archetype: usize,
    pub grid: usize,
    pub handle_cells: Vec<Cell>,
    pub interaction: Interaction,
    pub max_steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub next: usize,
    pub reward: f64,
    pub done: bool,
    pub success: bool,
}

impl VariationSpec {
    pub fn n_cells(&self) -> usize {
        self.grid * self.grid
    }

    pub fn cell_index(&self, cell: Cell) -> usize {
        cell.1 * self.grid + cell.0
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        (index % self.grid, index / self.grid)
    }

    pub fn is_handle(&self, index: usize) -> bool {
        self.handle_cells.iter().any(|&c| self.cell_index(c) == index)
    }

    /// Cells an episode may start from (every non-handle cell).
    pub fn free_cells(&self) -> Vec<usize> {
        (0..self.n_cells()).filter(|&i| !self.is_handle(i)).collect()
    }

    /// One transition. An incorrect interaction costs `wrong_interaction` and
    /// knocks the agent to a uniformly random free cell drawn from `rng`.
    pub fn step(&self, state: usize, action: Action, rewards: &Rewards, rng: &mut Rng) -> StepOutcome {
        let (x, y) = self.cell_at(state);
        let g = self.grid;
        let moved = |nx: usize, ny: usize| StepOutcome {
            next: ny * g + nx,
            reward: rewards.step,
            done: false,
            success: false,
        };
        match action {
            Action::Up => moved(x, (y + 1).min(g - 1)),
            Action::Down => moved(x, y.saturating_sub(1)),
            Action::Left => moved(x.saturating_sub(1), y),
            Action::Right => moved((x + 1).min(g - 1), y),
            Action::InteractCw | Action::InteractCcw => {
                if self.is_handle(state) && action == self.interaction.action() {
                    StepOutcome {
                        next: state,
                        reward: rewards.success,
                        done: true,
                        success: true,
                    }
                } else {
                    let free = self.free_cells();
                    let next = free[rng.random_range(0..free.len())];
                    StepOutcome {
                        next,
                        reward: rewards.wrong_interaction,
                        done: false,
                        success: false,
                    }
                }
            }
        }
    }
}

/// Fixed per-archetype geometry: handle template, home corner, turning
/// direction and the height profile used for its point cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct Archetype {
    pub template: Vec<Cell>,
    pub heights: Vec<f64>,
    pub anchor: Cell,
    pub interaction: Interaction,
}

/// Template cells and heights. Every template fits a 3x3 box so a jittered
/// copy fits the 4x4 home region.
const TEMPLATES: [(&[Cell], &[f64]); 8] = [
    (&[(0, 0), (1, 0), (2, 0), (0, 1), (1, 1)], &[0.0, 0.5, 1.0, 0.0, 0.5]),
    (&[(0, 0), (1, 0), (2, 0), (1, 1), (2, 1), (1, 2)], &[2.0, 0.0, 2.0, 0.0, 0.0, 2.0]),
    (&[(0, 0), (1, 0), (0, 1), (1, 1), (1, 2)], &[2.0, 1.0, 0.0, 0.0, 2.0]),
    (&[(0, 0), (1, 0), (0, 1), (1, 1), (2, 2), (2, 1)], &[0.0, 0.3, 0.3, 0.6, 2.5, 1.0]),
    (&[(0, 0), (1, 1), (2, 2)], &[0.0, 1.0, 0.0]),
    (&[(0, 0), (1, 0), (1, 1), (2, 1)], &[1.0, 0.0, 0.0, 1.0]),
    (&[(0, 0), (0, 1), (1, 0), (2, 0), (2, 1)], &[1.0, 2.0, 0.0, 1.0, 2.0]),
    (&[(1, 0), (0, 1), (1, 1), (2, 1), (1, 2)], &[0.0, 0.0, 2.0, 0.0, 0.0]),
];

pub const MAX_ARCHETYPES: usize = TEMPLATES.len();

/// Geometry of archetype `a` on a `grid x grid` board. Archetypes 0-3 use the
/// corners, 4-7 the edge midpoints.
pub fn archetype(a: usize, grid: usize) -> Archetype {
    let far = grid - 4;
    let mid = grid / 2 - 2;
    let anchors = [
        (0, 0),
        (far, far),
        (far, 0),
        (0, far),
        (mid, 0),
        (mid, far),
        (0, mid),
        (far, mid),
    ];
    let (template, heights) = TEMPLATES[a];
    Archetype {
        template: template.to_vec(),
        heights: heights.to_vec(),
        anchor: anchors[a],
        interaction: if a.is_multiple_of(2) {
            Interaction::Cw
        } else {
            Interaction::Ccw
        },
    }
}

const VARIATION_STREAM: u64 = 0x7661_7269;

fn archetype_counts(config: &RunConfig) -> Result<Vec<usize>, SimError> {
    let g = config.g_archetypes;
    if let Some(counts) = &config.archetype_counts {
        if counts.len() != g {
            return Err(SimError::InvalidConfig(format!(
                "archetype_counts has {} entries but g_archetypes is {g}",
                counts.len()
            )));
        }
        if counts.iter().sum::<usize>() != config.n_variations {
            return Err(SimError::InvalidConfig(
                "archetype_counts must sum to n_variations".into(),
            ));
        }
        return Ok(counts.clone());
    }
    Ok((0..g)
        .map(|a| config.n_variations / g + usize::from(a < config.n_variations % g))
        .collect())
}

/// Builds the variation family. With default counts, variation `i` belongs
/// to archetype `i mod G`; explicit counts lay archetypes out in blocks.
pub fn generate_variations(config: &RunConfig) -> Result<Vec<VariationSpec>, SimError> {
    let g = config.g_archetypes;
    if !(2..=MAX_ARCHETYPES).contains(&g) {
        return Err(SimError::InvalidConfig(format!(
            "g_archetypes must be in 2..={MAX_ARCHETYPES}, got {g}"
        )));
    }
    if config.n_variations < g {
        return Err(SimError::InvalidConfig(format!(
            "n_variations ({}) must be at least g_archetypes ({g})",
            config.n_variations
        )));
    }
    let min_grid = if g > 4 { 12 } else { 8 };
    if config.grid < min_grid {
        return Err(SimError::InvalidConfig(format!(
            "grid side {} too small for {g} archetypes (need {min_grid})",
            config.grid
        )));
    }
    if config.max_steps == 0 {
        return Err(SimError::InvalidConfig("max_steps must be positive".into()));
    }
    let counts = archetype_counts(config)?;
    let labels: Vec<usize> = if config.archetype_counts.is_some() {
        counts
            .iter()
            .enumerate()
            .flat_map(|(a, &c)| std::iter::repeat_n(a, c))
            .collect()
    } else {
        (0..config.n_variations).map(|i| i % g).collect()
    };
    let width = config.n_variations.saturating_sub(1).to_string().len().max(2);

    Ok(labels
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let arch = archetype(a, config.grid);
            let (dx, dy) = if counts[a] > 1 {
                let mut rng = seeded(derive_seed(
                    derive_seed(config.master_seed, VARIATION_STREAM),
                    i as u64,
                ));
                (rng.random_range(0..2usize), rng.random_range(0..2usize))
            } else {
                (0, 0)
            };
            VariationSpec {
                id: format!("v{i:0width$}"),
                archetype: a,
                grid: config.grid,
                handle_cells: arch
                    .template
                    .iter()
                    .map(|&(x, y)| (arch.anchor.0 + x + dx, arch.anchor.1 + y + dy))
                    .collect(),
                interaction: arch.interaction,
                max_steps: config.max_steps,
            }
        })
        .collect())
}

fn height_of(v: &VariationSpec, cell_pos: usize) -> f64 {
    archetype(v.archetype, v.grid).heights[cell_pos]
}

/// One point per handle cell at `(x, y, height)` with isotropic Gaussian
/// jitter of standard deviation `noise_sigma`.
pub fn variation_point_cloud(v: &VariationSpec, noise_sigma: f64, seed: u64) -> PointCloud {
    let mut rng = seeded(seed);
    let noise = Normal::new(0.0, noise_sigma.max(0.0)).expect("finite sigma");
    let points = v
        .handle_cells
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| {
            let base = [x as f64, y as f64, height_of(v, i)];
            if noise_sigma > 0.0 {
                [
                    base[0] + noise.sample(&mut rng),
                    base[1] + noise.sample(&mut rng),
                    base[2] + noise.sample(&mut rng),
                ]
            } else {
                base
            }
        })
        .collect();
    PointCloud::new(v.id.clone(), points)
}

/// Dense surface sample of the handle: `n_points` spread round-robin over
/// the handle cells, uniform inside each unit cell at the cell's height.
pub fn variation_surface_cloud(
    v: &VariationSpec,
    n_points: usize,
    noise_sigma: f64,
    seed: u64,
) -> PointCloud {
    let mut rng = seeded(seed);
    let noise = Normal::new(0.0, noise_sigma.max(0.0)).expect("finite sigma");
    let points = (0..n_points)
        .map(|i| {
            let c = i % v.handle_cells.len();
            let (x, y) = v.handle_cells[c];
            let z = height_of(v, c) + if noise_sigma > 0.0 { noise.sample(&mut rng) } else { 0.0 };
            [x as f64 + rng.random::<f64>(), y as f64 + rng.random::<f64>(), z]
        })
        .collect();
    PointCloud::new(v.id.clone(), points)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(n: usize, g: usize) -> RunConfig {
        RunConfig {
            n_variations: n,
            g_archetypes: g,
            ..RunConfig::default()
        }
    }

    #[test]
    fn templates_are_in_range() {
        for (t, h) in TEMPLATES {
            assert!((3..=6).contains(&t.len()));
            assert_eq!(t.len(), h.len());
            assert!(t.iter().all(|&(x, y)| x < 3 && y < 3));
        }
    }

    #[test]
    fn singleton_archetypes_have_no_jitter() {
        let vs = generate_variations(&config(4, 4)).unwrap();
        assert_eq!(vs.len(), 4);
        for (a, v) in vs.iter().enumerate() {
            assert_eq!(v.archetype, a);
            let arch = archetype(a, 9);
            let expected: Vec<Cell> = arch
                .template
                .iter()
                .map(|&(x, y)| (arch.anchor.0 + x, arch.anchor.1 + y))
                .collect();
            assert_eq!(v.handle_cells, expected);
        }
    }

    #[test]
    fn even_split() {
        let vs = generate_variations(&config(60, 4)).unwrap();
        let mut counts = [0; 4];
        vs.iter().for_each(|v| counts[v.archetype] += 1);
        assert_eq!(counts, [15, 15, 15, 15]);
    }

    #[test]
    fn explicit_counts() {
        let cfg = RunConfig {
            n_variations: 29,
            archetype_counts: Some(vec![4, 6, 9, 10]),
            ..RunConfig::default()
        };
        let vs = generate_variations(&cfg).unwrap();
        let mut counts = [0; 4];
        vs.iter().for_each(|v| counts[v.archetype] += 1);
        assert_eq!(counts, [4, 6, 9, 10]);
        let bad = RunConfig {
            archetype_counts: Some(vec![1, 2]),
            ..cfg
        };
        assert!(matches!(generate_variations(&bad), Err(SimError::InvalidConfig(_))));
    }

    #[test]
    fn invalid_configs() {
        assert!(generate_variations(&config(60, 1)).is_err());
        assert!(generate_variations(&config(3, 4)).is_err());
        assert!(generate_variations(&config(60, 9)).is_err());
        assert!(generate_variations(&config(60, 6)).is_err()); // grid 9 too small
    }

    #[test]
    fn stepping() {
        let v = &generate_variations(&config(4, 4)).unwrap()[0];
        let r = Rewards::default();
        let rng = &mut seeded(0);
        let corner = v.cell_index((0, 0));
        assert_eq!(v.step(corner, Action::Down, &r, rng).next, corner);
        assert_eq!(v.step(corner, Action::Left, &r, rng).next, corner);
        assert_eq!(v.step(corner, Action::Up, &r, rng).next, v.cell_index((0, 1)));
        let ok = v.step(corner, v.interaction.action(), &r, rng);
        assert!(ok.done && ok.success && ok.reward == 1.0);
        let wrong = v.step(corner, Action::InteractCcw, &r, rng);
        assert!(!wrong.done && wrong.reward == -0.05 && !v.is_handle(wrong.next));
        let off_handle = v.step(v.cell_index((8, 8)), Action::InteractCw, &r, rng);
        assert!(!off_handle.done && !off_handle.success);
        let landed: std::collections::HashSet<usize> =
            (0..200).map(|_| v.step(corner, Action::InteractCcw, &r, rng).next).collect();
        assert!(landed.len() > 20);
    }

    #[test]
    fn clouds() {
        let v = &generate_variations(&config(8, 4)).unwrap()[1];
        let exact = variation_point_cloud(v, 0.0, 3);
        assert_eq!(exact.len(), v.handle_cells.len());
        for (p, (i, &(x, y))) in exact.points.iter().zip(v.handle_cells.iter().enumerate()) {
            assert_eq!(*p, [x as f64, y as f64, height_of(v, i)]);
        }
        assert_eq!(variation_point_cloud(v, 0.05, 3), variation_point_cloud(v, 0.05, 3));
        assert_ne!(variation_point_cloud(v, 0.05, 3), exact);
        let dense = variation_surface_cloud(v, 1000, 0.01, 1);
        assert_eq!(dense.len(), 1000);
    }
}
