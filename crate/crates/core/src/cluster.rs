//! Partitioning of feature vectors into `k` groups.
//!
//! Centroids come from seeded k-means (k-means++ seeding, best of several
//! Lloyd restarts). Rows are then assigned either to their nearest centroid
//! ([`assign_vanilla`]) or through the size-capped greedy scan of the full
//! row/centroid distance table ([`assign_balanced_greedy`]). A random split
//! and an exact min-cost-flow assignment are provided for comparison.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::featex::FeatureMatrix;
use crate::linalg::sq_dist;
use crate::rng::{derive_seed, seeded};

#[derive(Debug, Error, PartialEq)]
pub enum ClusterError {
    #[error("invalid k={k} for {n} rows")]
    InvalidK { k: usize, n: usize },
    #[error("dimension mismatch: centroids have {expected}, features have {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("exact assignment supports at most 64 rows, got {0}")]
    InstanceTooLarge(usize),
}

pub type Result<T> = std::result::Result<T, ClusterError>;

/// Cluster centres in feature space, tagged with the seed that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Centroids {
    pub positions: Vec<Vec<f64>>,
    pub seed: u64,
}

impl Centroids {
    pub fn k(&self) -> usize {
        self.positions.len()
    }

    pub fn dim(&self) -> usize {
        self.positions.first().map_or(0, Vec::len)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansParams {
    pub k: usize,
    pub seed: u64,
    pub restarts: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl KMeansParams {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            seed,
            restarts: 10,
            max_iter: 300,
            tol: 1e-8,
        }
    }
}

/// Full k-means output including the per-restart inertia traces.
#[derive(Debug, Clone)]
pub struct KMeansFit {
    pub centroids: Centroids,
    pub inertia: f64,
    pub histories: Vec<Vec<f64>>,
}

fn nearest(point: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, pos) in centers.iter().enumerate() {
        let d = sq_dist(point, pos);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus(points: &[&[f64]], k: usize, rng: &mut crate::rng::Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centers = vec![points[first].to_vec()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, w) in d2.iter().enumerate() {
                acc += w;
                if *w > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // rounding can leave the target just past the last positive weight
            pick.unwrap_or_else(|| d2.iter().rposition(|w| *w > 0.0).unwrap())
        } else {
            (0..n).find(|&i| !chosen[i]).unwrap_or(0)
        };
        chosen[pick] = true;
        let c = points[pick].to_vec();
        for (w, p) in d2.iter_mut().zip(points) {
            *w = w.min(sq_dist(p, &c));
        }
        centers.push(c);
    }
    centers
}

fn lloyd(
    points: &[&[f64]],
    mut centers: Vec<Vec<f64>>,
    max_iter: usize,
    tol: f64,
) -> (Vec<Vec<f64>>, f64, Vec<f64>) {
    let k = centers.len();
    let dim = points[0].len();
    let mut history = Vec::new();
    let mut labels = vec![0usize; points.len()];
    let mut dists = vec![0.0; points.len()];
    let assign = |centers: &[Vec<f64>], labels: &mut [usize], dists: &mut [f64]| -> f64 {
        let mut inertia = 0.0;
        for (i, p) in points.iter().enumerate() {
            let (c, d) = nearest(p, centers);
            labels[i] = c;
            dists[i] = d;
            inertia += d;
        }
        inertia
    };

    let mut inertia = assign(&centers, &mut labels, &mut dists);
    history.push(inertia);
    for _ in 0..max_iter {
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            sums[l].iter_mut().zip(p.iter()).for_each(|(s, v)| *s += v);
        }
        // empty clusters take the points farthest from their current centre
        let mut far: Vec<usize> = (0..points.len()).collect();
        far.sort_by(|&a, &b| dists[b].total_cmp(&dists[a]).then(a.cmp(&b)));
        let mut far = far.into_iter();
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            } else if let Some(i) = far.next() {
                centers[c] = points[i].to_vec();
            }
        }
        let next = assign(&centers, &mut labels, &mut dists);
        history.push(next);
        let improvement = inertia - next;
        inertia = next;
        if improvement < tol {
            break;
        }
    }
    (centers, inertia, history)
}

pub fn kmeans_fit(matrix: &FeatureMatrix, params: &KMeansParams) -> Result<KMeansFit> {
    let n = matrix.len();
    if params.k == 0 || params.k > n {
        return Err(ClusterError::InvalidK { k: params.k, n });
    }
    let points: Vec<&[f64]> = matrix.values().collect();
    let mut best: Option<(Vec<Vec<f64>>, f64)> = None;
    let mut histories = Vec::with_capacity(params.restarts.max(1));
    for run in 0..params.restarts.max(1) {
        let mut rng = seeded(derive_seed(params.seed, run as u64));
        let init = plus_plus(&points, params.k, &mut rng);
        let (centers, inertia, history) = lloyd(&points, init, params.max_iter, params.tol);
        histories.push(history);
        if best.as_ref().is_none_or(|(_, b)| inertia < *b) {
            best = Some((centers, inertia));
        }
    }
    let (positions, inertia) = best.expect("at least one restart");
    Ok(KMeansFit {
        centroids: Centroids {
            positions,
            seed: params.seed,
        },
        inertia,
        histories,
    })
}

pub fn kmeans(matrix: &FeatureMatrix, params: &KMeansParams) -> Result<Centroids> {
    kmeans_fit(matrix, params).map(|f| f.centroids)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionMethod {
    Random,
    KmeansVanilla,
    BalancedGreedy,
    OptimalBalanced,
}

impl PartitionMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            PartitionMethod::Random => "random",
            PartitionMethod::KmeansVanilla => "kmeans_vanilla",
            PartitionMethod::BalancedGreedy => "balanced_greedy",
            PartitionMethod::OptimalBalanced => "optimal_balanced",
        }
    }

    pub fn uses_features(self) -> bool {
        !matches!(self, PartitionMethod::Random)
    }
}

impl std::fmt::Display for PartitionMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub centroid: Option<Vec<f64>>,
    pub members: Vec<String>,
}

/// Assignment of ids to `k` clusters. `cost` is the summed squared distance of
/// members to their centroid and is absent for random splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub method: PartitionMethod,
    pub seed: u64,
    pub k: usize,
    pub clusters: Vec<Cluster>,
    pub cost: Option<f64>,
}

impl Partition {
    pub fn sizes(&self) -> Vec<usize> {
        self.clusters.iter().map(|c| c.members.len()).collect()
    }

    pub fn sorted_sizes(&self) -> Vec<usize> {
        let mut s = self.sizes();
        s.sort_unstable();
        s
    }

    /// Largest minus smallest cluster size.
    pub fn imbalance(&self) -> usize {
        let s = self.sizes();
        s.iter().max().unwrap_or(&0) - s.iter().min().unwrap_or(&0)
    }

    pub fn cluster_of(&self) -> HashMap<&str, usize> {
        self.clusters
            .iter()
            .enumerate()
            .flat_map(|(c, cl)| cl.members.iter().map(move |m| (m.as_str(), c)))
            .collect()
    }

    /// True when every id in `ids` appears in exactly one cluster and no
    /// other ids are present.
    pub fn covers_exactly(&self, ids: &[String]) -> bool {
        let mut seen: HashMap<&str, usize> = HashMap::new();
        for m in self.clusters.iter().flat_map(|c| &c.members) {
            *seen.entry(m).or_default() += 1;
        }
        seen.len() == ids.len()
            && ids.iter().all(|id| seen.get(id.as_str()) == Some(&1))
    }
}

fn check_dims(matrix: &FeatureMatrix, centroids: &Centroids) -> Result<()> {
    if centroids.k() == 0 {
        return Err(ClusterError::InvalidK { k: 0, n: matrix.len() });
    }
    if centroids.dim() != matrix.dim() {
        return Err(ClusterError::DimensionMismatch {
            expected: centroids.dim(),
            found: matrix.dim(),
        });
    }
    Ok(())
}

fn build_partition(
    matrix: &FeatureMatrix,
    centroids: &Centroids,
    labels: &[usize],
    method: PartitionMethod,
) -> Partition {
    let mut clusters: Vec<Cluster> = centroids
        .positions
        .iter()
        .map(|c| Cluster {
            centroid: Some(c.clone()),
            members: Vec::new(),
        })
        .collect();
    let mut cost = 0.0;
    for (row, &l) in matrix.rows().iter().zip(labels) {
        cost += sq_dist(&row.values, &centroids.positions[l]);
        clusters[l].members.push(row.id.clone());
    }
    Partition {
        method,
        seed: centroids.seed,
        k: centroids.k(),
        clusters,
        cost: Some(cost),
    }
}

/// Nearest-centroid assignment; ties go to the lowest centroid index.
pub fn assign_vanilla(matrix: &FeatureMatrix, centroids: &Centroids) -> Result<Partition> {
    check_dims(matrix, centroids)?;
    let labels: Vec<usize> = matrix
        .values()
        .map(|p| nearest(p, &centroids.positions).0)
        .collect();
    Ok(build_partition(matrix, centroids, &labels, PartitionMethod::KmeansVanilla))
}

/// Cluster size limits used by the greedy scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapacityRule {
    /// `floor(n/k)` per cluster plus `n mod k` single extra slots shared
    /// globally; guarantees sizes differ by at most one.
    #[default]
    FloorPlusSingleExtra,
    /// Uniform cap of `ceil(n/k)`; can leave one cluster short.
    Ceil,
}

/// Ascending (distance, row, centroid) table over all row/centroid pairs.
pub fn distance_table(matrix: &FeatureMatrix, centroids: &Centroids) -> Vec<(usize, usize, f64)> {
    let mut table: Vec<(usize, usize, f64)> = matrix
        .values()
        .enumerate()
        .flat_map(|(r, p)| {
            centroids
                .positions
                .iter()
                .enumerate()
                .map(move |(c, pos)| (r, c, sq_dist(p, pos).sqrt()))
        })
        .collect();
    table.sort_by(|a, b| {
        a.2.total_cmp(&b.2)
            .then(a.0.cmp(&b.0))
            .then(a.1.cmp(&b.1))
    });
    table
}

pub fn assign_balanced_greedy(matrix: &FeatureMatrix, centroids: &Centroids) -> Result<Partition> {
    assign_balanced_greedy_with(matrix, centroids, CapacityRule::FloorPlusSingleExtra)
}

pub fn assign_balanced_greedy_with(
    matrix: &FeatureMatrix,
    centroids: &Centroids,
    rule: CapacityRule,
) -> Result<Partition> {
    check_dims(matrix, centroids)?;
    let n = matrix.len();
    let k = centroids.k();
    if k > n {
        return Err(ClusterError::InvalidK { k, n });
    }
    let floor = n / k;
    let mut extras_left = n % k;
    let ceil = n.div_ceil(k);

    let mut labels: Vec<Option<usize>> = vec![None; n];
    let mut sizes = vec![0usize; k];
    let mut extra_used = vec![false; k];
    let mut remaining = n;
    for (r, c, _) in distance_table(matrix, centroids) {
        if remaining == 0 {
            break;
        }
        if labels[r].is_some() {
            continue;
        }
        let accept = match rule {
            CapacityRule::FloorPlusSingleExtra => {
                if sizes[c] < floor {
                    true
                } else if sizes[c] == floor && !extra_used[c] && extras_left > 0 {
                    extra_used[c] = true;
                    extras_left -= 1;
                    true
                } else {
                    false
                }
            }
            CapacityRule::Ceil => sizes[c] < ceil,
        };
        if accept {
            labels[r] = Some(c);
            sizes[c] += 1;
            remaining -= 1;
        }
    }
    let labels: Vec<usize> = labels
        .into_iter()
        .map(|l| l.expect("capacities sum to n"))
        .collect();
    Ok(build_partition(matrix, centroids, &labels, PartitionMethod::BalancedGreedy))
}

/// Uniform random permutation of `ids` cut into `k` contiguous groups whose
/// sizes differ by at most one (larger groups first).
pub fn assign_random(ids: &[String], k: usize, seed: u64) -> Result<Partition> {
    let n = ids.len();
    if k == 0 || k > n {
        return Err(ClusterError::InvalidK { k, n });
    }
    let mut order: Vec<String> = ids.to_vec();
    order.shuffle(&mut seeded(seed));
    let floor = n / k;
    let extra = n % k;
    let mut clusters = Vec::with_capacity(k);
    let mut start = 0;
    for c in 0..k {
        let size = floor + usize::from(c < extra);
        clusters.push(Cluster {
            centroid: None,
            members: order[start..start + size].to_vec(),
        });
        start += size;
    }
    Ok(Partition {
        method: PartitionMethod::Random,
        seed,
        k,
        clusters,
        cost: None,
    })
}

/// Exact minimum-cost assignment under the same floor-plus-single-extra
/// capacities as the greedy scan, solved as a min-cost flow:
/// `source -> row -> centroid -> sink` with `floor` base capacity per
/// centroid plus one extra unit routed through a shared node of capacity
/// `n mod k`.
pub fn optimal_balanced_assignment(matrix: &FeatureMatrix, centroids: &Centroids) -> Result<Partition> {
    check_dims(matrix, centroids)?;
    let n = matrix.len();
    let k = centroids.k();
    if n > 64 {
        return Err(ClusterError::InstanceTooLarge(n));
    }
    if k > n {
        return Err(ClusterError::InvalidK { k, n });
    }
    let floor = n / k;
    let extra = n % k;

    // node layout
    let source = 0;
    let row_node = |r: usize| 1 + r;
    let cen_node = |c: usize| 1 + n + c;
    let extra_node = 1 + n + k;
    let sink = extra_node + 1;
    let mut g = FlowGraph::new(sink + 1);
    for r in 0..n {
        g.add_edge(source, row_node(r), 1, 0.0);
    }
    let mut row_edges = vec![vec![0usize; k]; n];
    for (r, p) in matrix.values().enumerate() {
        for (c, pos) in centroids.positions.iter().enumerate() {
            row_edges[r][c] = g.add_edge(row_node(r), cen_node(c), 1, sq_dist(p, pos));
        }
    }
    for c in 0..k {
        g.add_edge(cen_node(c), sink, floor as i64, 0.0);
        g.add_edge(cen_node(c), extra_node, 1, 0.0);
    }
    g.add_edge(extra_node, sink, extra as i64, 0.0);
    let flow = g.min_cost_flow(source, sink, n as i64);
    debug_assert_eq!(flow, n as i64);

    let labels: Vec<usize> = row_edges
        .iter()
        .map(|edges| {
            edges
                .iter()
                .position(|&e| g.edges[e].cap == 0)
                .expect("every row carries one unit of flow")
        })
        .collect();
    let mut p = build_partition(matrix, centroids, &labels, PartitionMethod::OptimalBalanced);
    p.method = PartitionMethod::OptimalBalanced;
    Ok(p)
}

struct FlowEdge {
    to: usize,
    cap: i64,
    cost: f64,
}

struct FlowGraph {
    edges: Vec<FlowEdge>,
    adj: Vec<Vec<usize>>,
}

impl FlowGraph {
    fn new(nodes: usize) -> Self {
        Self {
            edges: Vec::new(),
            adj: vec![Vec::new(); nodes],
        }
    }

    fn add_edge(&mut self, from: usize, to: usize, cap: i64, cost: f64) -> usize {
        let id = self.edges.len();
        self.edges.push(FlowEdge { to, cap, cost });
        self.adj[from].push(id);
        self.edges.push(FlowEdge { to: from, cap: 0, cost: -cost });
        self.adj[to].push(id + 1);
        id
    }

    /// Successive shortest paths with Bellman-Ford; graphs here are tiny.
    fn min_cost_flow(&mut self, s: usize, t: usize, want: i64) -> i64 {
        let nodes = self.adj.len();
        let mut flow = 0;
        while flow < want {
            let mut dist = vec![f64::INFINITY; nodes];
            let mut prev: Vec<Option<usize>> = vec![None; nodes];
            dist[s] = 0.0;
            for _ in 0..nodes {
                let mut changed = false;
                for u in 0..nodes {
                    if !dist[u].is_finite() {
                        continue;
                    }
                    for &e in &self.adj[u] {
                        let edge = &self.edges[e];
                        let nd = dist[u] + edge.cost;
                        if edge.cap > 0 && nd < dist[edge.to] - 1e-12 {
                            dist[edge.to] = nd;
                            prev[edge.to] = Some(e);
                            changed = true;
                        }
                    }
                }
                if !changed {
                    break;
                }
            }
            if !dist[t].is_finite() {
                break;
            }
            let mut push = want - flow;
            let mut v = t;
            while let Some(e) = prev[v] {
                push = push.min(self.edges[e].cap);
                v = self.edges[e ^ 1].to;
            }
            let mut v = t;
            while let Some(e) = prev[v] {
                self.edges[e].cap -= push;
                self.edges[e ^ 1].cap += push;
                v = self.edges[e ^ 1].to;
            }
            flow += push;
        }
        flow
    }
}

/// Adjusted Rand Index between two labelings of the same items.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings must cover the same items");
    let n = a.len();
    let pairs = |x: u64| x * x.saturating_sub(1) / 2;
    let mut table: HashMap<(usize, usize), u64> = HashMap::new();
    let mut rows: HashMap<usize, u64> = HashMap::new();
    let mut cols: HashMap<usize, u64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: u64 = table.values().map(|&v| pairs(v)).sum();
    let sum_a: u64 = rows.values().map(|&v| pairs(v)).sum();
    let sum_b: u64 = cols.values().map(|&v| pairs(v)).sum();
    let total = pairs(n as u64) as f64;
    if total == 0.0 {
        return 1.0;
    }
    let expected = sum_a as f64 * sum_b as f64 / total;
    let max = 0.5 * (sum_a + sum_b) as f64;
    if (max - expected).abs() < f64::EPSILON {
        return 1.0;
    }
    (index as f64 - expected) / (max - expected)
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::featex::FeatureVector;

    fn matrix(points: &[Vec<f64>]) -> FeatureMatrix {
        FeatureMatrix::new(
            points
                .iter()
                .enumerate()
                .map(|(i, p)| FeatureVector {
                    id: format!("v{i:02}"),
                    values: p.clone(),
                })
                .collect(),
        )
        .unwrap()
    }

    fn random_points(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = seeded(seed);
        (0..n)
            .map(|_| (0..dim).map(|_| rng.random::<f64>()).collect())
            .collect()
    }

    #[test]
    fn blobs_are_found() {
        let mut pts = Vec::new();
        let mut rng = seeded(1);
        for center in [[0.0, 0.0], [10.0, 10.0]] {
            for _ in 0..5 {
                let a = rng.random::<f64>() * std::f64::consts::TAU;
                let r = rng.random::<f64>() * 0.1;
                pts.push(vec![center[0] + r * a.cos(), center[1] + r * a.sin()]);
            }
        }
        let c = kmeans(&matrix(&pts), &KMeansParams::new(2, 3)).unwrap();
        for center in [[0.0, 0.0], [10.0, 10.0]] {
            assert!(c.positions.iter().any(|p| sq_dist(p, &center).sqrt() < 0.2));
        }
    }

    #[test]
    fn k_equals_n_is_exact() {
        let pts = random_points(6, 3, 2);
        let fit = kmeans_fit(&matrix(&pts), &KMeansParams::new(6, 0)).unwrap();
        assert_eq!(fit.inertia, 0.0);
        for p in &pts {
            assert!(fit.centroids.positions.contains(p));
        }
        assert!(matches!(
            kmeans(&matrix(&pts), &KMeansParams::new(7, 0)),
            Err(ClusterError::InvalidK { k: 7, n: 6 })
        ));
    }

    #[test]
    fn duplicate_points_do_not_break_seeding() {
        let pts = vec![vec![1.0, 1.0]; 5];
        let fit = kmeans_fit(&matrix(&pts), &KMeansParams::new(3, 0)).unwrap();
        assert_eq!(fit.inertia, 0.0);
    }

    #[test]
    fn vanilla_tie_break_and_imbalance() {
        let cents = Centroids {
            positions: vec![vec![-1.0, 0.0], vec![0.0, 5.0], vec![1.0, 0.0]],
            seed: 0,
        };
        let p = assign_vanilla(&matrix(&[vec![0.0, 0.0]]), &cents).unwrap();
        assert_eq!(p.clusters[0].members, vec!["v00".to_string()]);

        let same = matrix(&vec![vec![0.0, 5.0]; 7]);
        let p = assign_vanilla(&same, &cents).unwrap();
        assert_eq!(p.sizes(), vec![0, 7, 0]);
        assert_eq!(p.method, PartitionMethod::KmeansVanilla);

        let wrong = Centroids {
            positions: vec![vec![0.0; 3]],
            seed: 0,
        };
        assert!(matches!(
            assign_vanilla(&same, &wrong),
            Err(ClusterError::DimensionMismatch { expected: 3, found: 2 })
        ));
    }

    #[test]
    fn greedy_sizes_for_29_by_4() {
        let m = matrix(&random_points(29, 2, 8));
        let c = kmeans(&m, &KMeansParams::new(4, 1)).unwrap();
        let p = assign_balanced_greedy(&m, &c).unwrap();
        assert_eq!(p.sorted_sizes(), vec![7, 7, 7, 8]);
        assert!(p.covers_exactly(&m.ids()));
    }

    #[test]
    fn greedy_forced_bijection() {
        let m = matrix(&random_points(5, 2, 4));
        let c = kmeans(&m, &KMeansParams::new(5, 1)).unwrap();
        let p = assign_balanced_greedy(&m, &c).unwrap();
        assert_eq!(p.sizes(), vec![1; 5]);
        let o = optimal_balanced_assignment(&m, &c).unwrap();
        assert_eq!(o.sizes(), vec![1; 5]);
        assert!(p.cost.unwrap() >= o.cost.unwrap() - 1e-12);
    }

    #[test]
    fn ceil_rule_can_leave_a_short_cluster() {
        // every point sits nearest to centroid 0, so the scan fills in order
        let pts: Vec<Vec<f64>> = (0..29).map(|i| vec![i as f64 * 1e-3]).collect();
        let cents = Centroids {
            positions: vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]],
            seed: 0,
        };
        let p = assign_balanced_greedy_with(&matrix(&pts), &cents, CapacityRule::Ceil).unwrap();
        assert_eq!(p.sizes(), vec![8, 8, 8, 5]);
        let q = assign_balanced_greedy(&matrix(&pts), &cents).unwrap();
        assert_eq!(q.sizes(), vec![8, 7, 7, 7]);
    }

    #[test]
    fn random_split() {
        let ids: Vec<String> = (0..29).map(|i| format!("f{i}")).collect();
        let p = assign_random(&ids, 4, 11).unwrap();
        assert_eq!(p.sorted_sizes(), vec![7, 7, 7, 8]);
        assert_eq!(p.cost, None);
        assert!(p.covers_exactly(&ids));
        assert_eq!(p, assign_random(&ids, 4, 11).unwrap());
        let four = assign_random(&ids[..4], 4, 0).unwrap();
        assert_eq!(four.sizes(), vec![1, 1, 1, 1]);
        assert!(matches!(assign_random(&ids[..3], 4, 0), Err(ClusterError::InvalidK { .. })));
        assert!(matches!(assign_random(&ids, 0, 0), Err(ClusterError::InvalidK { .. })));
    }

    #[test]
    fn oracle_rejects_large_instances() {
        let m = matrix(&random_points(65, 2, 0));
        let c = Centroids {
            positions: vec![vec![0.0, 0.0]],
            seed: 0,
        };
        assert_eq!(
            optimal_balanced_assignment(&m, &c),
            Err(ClusterError::InstanceTooLarge(65))
        );
    }

    #[test]
    fn ari_reference_values() {
        // reference values from sklearn.metrics.adjusted_rand_score
        assert!((adjusted_rand_index(&[0, 0, 1, 1], &[1, 1, 0, 0]) - 1.0).abs() < 1e-12);
        assert!((adjusted_rand_index(&[0, 0, 1, 2], &[0, 0, 1, 1]) - 0.571_428_571_428_571_4).abs() < 1e-12);
        assert!((adjusted_rand_index(&[0, 0, 1, 1], &[0, 1, 0, 1]) + 0.5).abs() < 1e-12);
    }

    #[test]
    fn partition_json_shape() {
        let ids: Vec<String> = (0..4).map(|i| format!("f{i}")).collect();
        let p = assign_random(&ids, 2, 0).unwrap();
        let v = serde_json::to_value(&p).unwrap();
        assert_eq!(v["method"], "random");
        assert!(v["cost"].is_null());
        assert!(v["clusters"][0]["centroid"].is_null());
        let back: Partition = serde_json::from_value(v).unwrap();
        assert_eq!(back, p);
    }
}
