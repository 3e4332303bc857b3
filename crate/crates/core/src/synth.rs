//! Ground-truth generators: group dynamics of communities, roles or random
//! multi-order models, emission over member nodes, and path sampling.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::corpus::{NodeTable, Partition, PathCorpus};
use crate::error::{invalid, Result};
use crate::hog::PathProbabilities;

const SUM_TOLERANCE: f64 = 1e-12;

/// Multi-order group dynamics: layer `k < K` gives the step at position `k`
/// given the full prefix, layer `K` every later step given the last `K` groups.
///
/// Layer `k` is stored row-major with `n^k` rows of length `n`, rows indexed
/// by the history read as a base-`n` number (oldest group most significant).
#[derive(Debug, Clone, PartialEq)]
pub struct GroupDynamics {
    n_groups: usize,
    order: usize,
    layers: Vec<Vec<f64>>,
}

impl GroupDynamics {
    pub fn new(n_groups: usize, order: usize, layers: Vec<Vec<f64>>) -> Result<Self> {
        if n_groups == 0 {
            return Err(invalid("at least one group is required"));
        }
        if layers.len() != order + 1 {
            return Err(invalid(format!("order {order} needs {} layers, got {}", order + 1, layers.len())));
        }
        for (k, layer) in layers.iter().enumerate() {
            if layer.len() != n_groups.pow(k as u32) * n_groups {
                return Err(invalid(format!("layer {k} has {} entries", layer.len())));
            }
            for row in layer.chunks(n_groups) {
                let sum: f64 = row.iter().sum();
                if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) || (sum - 1.0).abs() > SUM_TOLERANCE {
                    return Err(invalid(format!("layer {k} has a row that is not a probability vector")));
                }
            }
        }
        Ok(Self { n_groups, order, layers })
    }

    /// First-order dynamics with a uniform start distribution.
    pub fn first_order(matrix: Vec<Vec<f64>>) -> Result<Self> {
        let n = matrix.len();
        let start = vec![1.0 / n as f64; n];
        Self::new(n, 1, vec![start, matrix.into_iter().flatten().collect()])
    }

    pub fn n_groups(&self) -> usize {
        self.n_groups
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn layer(&self, k: usize) -> &[f64] {
        &self.layers[k]
    }

    /// Next-group distribution after `history`; only the last `K` groups matter
    /// once the history is at least `K` long.
    pub fn row(&self, history: &[u32]) -> &[f64] {
        let h = if history.len() > self.order { &history[history.len() - self.order..] } else { history };
        let idx = h.iter().fold(0usize, |acc, &g| acc * self.n_groups + g as usize);
        let n = self.n_groups;
        &self.layers[h.len()][idx * n..(idx + 1) * n]
    }

    pub fn prob(&self, history: &[u32], group: u32) -> f64 {
        self.row(history)[group as usize]
    }
}

/// Stay in the current group with probability `p_in`, otherwise move to one
/// of the other groups uniformly; paths start in a uniformly chosen group.
pub fn make_community_dynamics(n_groups: usize, p_in: f64) -> Result<GroupDynamics> {
    if n_groups < 2 {
        return Err(invalid("community dynamics need at least two groups"));
    }
    if !(p_in > 0.0 && p_in < 1.0) {
        return Err(invalid("within-group probability must lie in (0, 1)"));
    }
    diagonal_dynamics(n_groups, p_in)
}

/// Return to the same role with probability `p_stay`, otherwise move to one of
/// the other roles uniformly.
pub fn make_role_dynamics(n_groups: usize, p_stay: f64) -> Result<GroupDynamics> {
    if n_groups < 2 {
        return Err(invalid("role dynamics need at least two groups"));
    }
    if !(0.0..=1.0).contains(&p_stay) {
        return Err(invalid("stay probability must lie in [0, 1]"));
    }
    diagonal_dynamics(n_groups, p_stay)
}

fn diagonal_dynamics(n: usize, diag: f64) -> Result<GroupDynamics> {
    let off = (1.0 - diag) / (n - 1) as f64;
    let matrix = (0..n).map(|i| (0..n).map(|j| if i == j { diag } else { off }).collect()).collect();
    GroupDynamics::first_order(matrix)
}

/// Uniform draw from the probability simplex (a symmetric Dirichlet(1) sample).
pub fn sample_simplex<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let draws: Vec<f64> = (0..n).map(|_| -libm::log(1.0 - rng.gen::<f64>())).collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|d| d / total).collect()
}

/// Multi-order dynamics with every row of every layer drawn uniformly from the simplex.
pub fn make_random_mon<R: Rng + ?Sized>(n_groups: usize, order: usize, rng: &mut R) -> Result<GroupDynamics> {
    if n_groups == 0 {
        return Err(invalid("at least one group is required"));
    }
    let layers = (0..=order)
        .map(|k| (0..n_groups.pow(k as u32)).flat_map(|_| sample_simplex(n_groups, rng)).collect())
        .collect();
    GroupDynamics::new(n_groups, order, layers)
}

/// How a group chooses which member node to emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmissionKind {
    /// Every member equally likely.
    Uniform,
    /// Member probabilities drawn uniformly from the simplex per group.
    Dirichlet,
}

/// Generating model: group map, group dynamics and per-group emission.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub partition: Partition,
    pub dynamics: GroupDynamics,
    /// Probability of each node within its own group.
    pub emission: Vec<f64>,
}

impl GroundTruth {
    /// Numbers nodes group by group: the first `sizes[0]` nodes form group 0, and so on.
    pub fn new<R: Rng + ?Sized>(dynamics: GroupDynamics, sizes: &[usize], kind: EmissionKind, rng: &mut R) -> Result<Self> {
        if sizes.len() != dynamics.n_groups() || sizes.contains(&0) {
            return Err(invalid("need one non-empty size per group"));
        }
        let labels: Vec<u32> = sizes.iter().enumerate().flat_map(|(g, &s)| core::iter::repeat_n(g as u32, s)).collect();
        let emission = sizes
            .iter()
            .flat_map(|&s| match kind {
                EmissionKind::Uniform => vec![1.0 / s as f64; s],
                EmissionKind::Dirichlet => sample_simplex(s, rng),
            })
            .collect();
        let partition = Partition::new(labels, sizes.len() as u32)?;
        Self::with_emission(partition, dynamics, emission)
    }

    /// `groups` groups of `per_group` nodes each.
    pub fn equal_groups<R: Rng + ?Sized>(dynamics: GroupDynamics, per_group: usize, kind: EmissionKind, rng: &mut R) -> Result<Self> {
        let sizes = vec![per_group; dynamics.n_groups()];
        Self::new(dynamics, &sizes, kind, rng)
    }

    pub fn with_emission(partition: Partition, dynamics: GroupDynamics, emission: Vec<f64>) -> Result<Self> {
        if partition.n_labels() as usize != dynamics.n_groups() || emission.len() != partition.len() {
            return Err(invalid("partition, dynamics and emission disagree in size"));
        }
        let mut sums = vec![0.0; dynamics.n_groups()];
        for (v, &g) in partition.labels().iter().enumerate() {
            sums[g as usize] += emission[v];
        }
        if sums.iter().any(|s| (s - 1.0).abs() > SUM_TOLERANCE) {
            return Err(invalid("emission probabilities of a group must sum to 1"));
        }
        Ok(Self { partition, dynamics, emission })
    }

    pub fn members(&self, group: u32) -> Vec<u32> {
        (0..self.partition.len() as u32).filter(|&v| self.partition.label(v) == group).collect()
    }
}

/// Given-parameter probabilities.
impl PathProbabilities for GroundTruth {
    fn group_of(&self, node: u32) -> Option<u32> {
        self.partition.labels().get(node as usize).copied()
    }

    fn order(&self) -> usize {
        self.dynamics.order()
    }

    fn emission(&self, node: u32) -> f64 {
        self.emission[node as usize]
    }

    fn transition(&self, history: &[u32], group: u32) -> Option<f64> {
        let p = self.dynamics.prob(history, group);
        (p > 0.0).then_some(p)
    }
}

fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Group sequence with `length` transitions (`length + 1` groups).
pub fn sample_group_path<R: Rng + ?Sized>(dynamics: &GroupDynamics, length: usize, rng: &mut R) -> Vec<u32> {
    let mut path = Vec::with_capacity(length + 1);
    for _ in 0..=length {
        let g = sample_index(dynamics.row(&path), rng) as u32;
        path.push(g);
    }
    path
}

/// Samples `n_paths` node paths of `length` transitions each: a group path
/// from the dynamics, then one member node emitted per position.
pub fn sample_paths<R: Rng + ?Sized>(truth: &GroundTruth, n_paths: usize, length: usize, rng: &mut R) -> PathCorpus {
    let n_groups = truth.dynamics.n_groups();
    let members: Vec<Vec<u32>> = (0..n_groups as u32).map(|g| truth.members(g)).collect();
    let weights: Vec<Vec<f64>> = members.iter().map(|m| m.iter().map(|&v| truth.emission[v as usize]).collect()).collect();
    let mut corpus = PathCorpus::new(NodeTable::numbered("v", truth.partition.len()));
    for _ in 0..n_paths {
        let groups = sample_group_path(&truth.dynamics, length, rng);
        let nodes = groups
            .iter()
            .map(|&g| members[g as usize][sample_index(&weights[g as usize], rng)])
            .collect();
        corpus.paths.push(nodes);
    }
    corpus
}
