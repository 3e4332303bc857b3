//! Nodes, paths, graph constraints and group maps.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};

/// Bijection between node tokens and dense indices `0..len`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodeTable {
    names: Vec<String>,
    index: BTreeMap<String, u32>,
}

impl NodeTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Table whose tokens are `prefix0, prefix1, ...`.
    pub fn numbered(prefix: &str, len: usize) -> Self {
        let mut table = Self::new();
        for i in 0..len {
            table.intern(&format!("{prefix}{i}"));
        }
        table
    }

    /// Index of `name`, inserting it if unseen.
    pub fn intern(&mut self, name: &str) -> u32 {
        if let Some(&idx) = self.index.get(name) {
            return idx;
        }
        let idx = self.names.len() as u32;
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), idx);
        idx
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    pub fn name(&self, idx: u32) -> &str {
        &self.names[idx as usize]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// Directed edge set restricting which node may follow which. Self-loops allowed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GraphConstraint {
    edges: BTreeSet<(u32, u32)>,
}

impl GraphConstraint {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, from: u32, to: u32) {
        self.edges.insert((from, to));
    }

    pub fn contains(&self, from: u32, to: u32) -> bool {
        self.edges.contains(&(from, to))
    }

    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.edges.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

impl FromIterator<(u32, u32)> for GraphConstraint {
    fn from_iter<I: IntoIterator<Item = (u32, u32)>>(iter: I) -> Self {
        Self { edges: iter.into_iter().collect() }
    }
}

/// Multiset of paths over a node universe, optionally tied to a graph.
///
/// Duplicate paths are kept; the universe may hold nodes no path visits.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PathCorpus {
    pub nodes: NodeTable,
    pub paths: Vec<Vec<u32>>,
    pub constraint: Option<GraphConstraint>,
}

impl PathCorpus {
    pub fn new(nodes: NodeTable) -> Self {
        Self { nodes, paths: Vec::new(), constraint: None }
    }

    /// Builds a corpus from token sequences, interning tokens in order of appearance.
    pub fn from_tokens<P, T>(paths: P) -> Self
    where
        P: IntoIterator<Item = T>,
        T: IntoIterator,
        T::Item: AsRef<str>,
    {
        let mut corpus = Self::default();
        for path in paths {
            let path: Vec<u32> = path.into_iter().map(|t| corpus.nodes.intern(t.as_ref())).collect();
            corpus.paths.push(path);
        }
        corpus
    }

    pub fn with_constraint(mut self, constraint: GraphConstraint) -> Self {
        self.constraint = Some(constraint);
        self
    }

    pub fn universe(&self) -> usize {
        self.nodes.len()
    }

    /// Checks node indices, non-emptiness and graph edges of every path.
    pub fn validate(&self) -> Result<()> {
        self.paths.iter().enumerate().try_for_each(|(p, path)| self.validate_path(p, path))
    }

    /// Checks one path: non-empty, known nodes, and graph edges if constrained.
    pub(crate) fn validate_path(&self, p: usize, path: &[u32]) -> Result<()> {
        let universe = self.universe();
        if path.is_empty() {
            return Err(Error::EmptyPath { path: p });
        }
        if let Some(&node) = path.iter().find(|&&v| v as usize >= universe) {
            return Err(Error::UnknownNode { path: p, node, universe });
        }
        if let Some(graph) = &self.constraint {
            for (i, w) in path.windows(2).enumerate() {
                if !graph.contains(w[0], w[1]) {
                    return Err(Error::ConstraintViolation { path: p, position: i + 1, from: w[0], to: w[1] });
                }
            }
        }
        Ok(())
    }

    /// Total number of node occurrences, i.e. the sum of `length + 1` over paths.
    pub fn occurrences(&self) -> usize {
        self.paths.iter().map(Vec::len).sum()
    }

    /// Replaces every node by its group label; the result's universe is the label set.
    pub fn relabel(&self, partition: &Partition) -> Result<PathCorpus> {
        let mut out = PathCorpus::new(NodeTable::numbered("g", partition.n_labels() as usize));
        for path in &self.paths {
            let mapped = path.iter().map(|&v| partition.try_label(v)).collect::<Result<Vec<_>>>()?;
            out.paths.push(mapped);
        }
        Ok(out)
    }
}

/// Total group map from nodes `0..len` to labels `0..n_labels`.
///
/// Labels without members are permitted; they simply do not count as groups.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    labels: Vec<u32>,
    n_labels: u32,
}

impl Partition {
    pub fn new(labels: Vec<u32>, n_labels: u32) -> Result<Self> {
        if let Some((node, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= n_labels) {
            return Err(Error::LabelOutOfRange { node: node as u32, label, n_labels });
        }
        Ok(Self { labels, n_labels })
    }

    /// Uses the smallest label bound that fits the given labels.
    pub fn from_labels(labels: Vec<u32>) -> Self {
        let n_labels = labels.iter().max().map_or(1, |&m| m + 1);
        Self { labels, n_labels }
    }

    pub fn singletons(n: usize) -> Self {
        Self { labels: (0..n as u32).collect(), n_labels: n.max(1) as u32 }
    }

    pub fn single_group(n: usize) -> Self {
        Self { labels: alloc::vec![0; n], n_labels: 1 }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_labels(&self) -> u32 {
        self.n_labels
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// Label of `node`. Panics if the node is outside the partition.
    pub fn label(&self, node: u32) -> u32 {
        self.labels[node as usize]
    }

    pub fn try_label(&self, node: u32) -> Result<u32> {
        self.labels.get(node as usize).copied().ok_or(Error::UnassignedNode { node })
    }

    /// Members per label, including empty labels.
    pub fn group_sizes(&self) -> Vec<usize> {
        let mut sizes = alloc::vec![0usize; self.n_labels as usize];
        for &l in &self.labels {
            sizes[l as usize] += 1;
        }
        sizes
    }

    /// Whether each label has at least one member.
    pub fn occupied(&self) -> Vec<bool> {
        self.group_sizes().into_iter().map(|s| s > 0).collect()
    }

    /// Number of labels with at least one member.
    pub fn effective_groups(&self) -> usize {
        self.group_sizes().iter().filter(|&&s| s > 0).count()
    }

    /// Relabels groups in order of first appearance (a restricted growth string).
    pub fn canonical(&self) -> Partition {
        let mut map = alloc::vec![u32::MAX; self.n_labels as usize];
        let mut next = 0u32;
        let labels = self
            .labels
            .iter()
            .map(|&l| {
                let slot = &mut map[l as usize];
                if *slot == u32::MAX {
                    *slot = next;
                    next += 1;
                }
                *slot
            })
            .collect();
        Partition { labels, n_labels: next.max(1) }
    }

    /// Whether both partitions group the nodes identically, ignoring label names.
    pub fn same_grouping(&self, other: &Partition) -> bool {
        self.len() == other.len() && self.canonical().labels == other.canonical().labels
    }

    pub fn set_label(&mut self, node: u32, label: u32) -> Result<()> {
        if label >= self.n_labels {
            return Err(Error::LabelOutOfRange { node, label, n_labels: self.n_labels });
        }
        let slot = self.labels.get_mut(node as usize).ok_or(Error::UnassignedNode { node })?;
        *slot = label;
        Ok(())
    }

    /// Copy with a raised label bound; existing labels are kept.
    pub fn with_label_bound(&self, n_labels: u32) -> Result<Partition> {
        if n_labels < self.n_labels && self.labels.iter().any(|&l| l >= n_labels) {
            return Err(invalid(format!("label bound {n_labels} is below a used label")));
        }
        Ok(Partition { labels: self.labels.clone(), n_labels: n_labels.max(1) })
    }
}
