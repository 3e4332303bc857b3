//! Layered transition counts: one pass over the corpus at node level, then
//! relabeling to group level for any candidate partition.
//!
//! Layer `k < K` holds the step at path position `k` keyed by the full prefix
//! (`k = 0` are path starts). The tail layer holds every position `>= K` keyed
//! by the last `K` symbols. With `K = 0` the tail layer covers every position
//! under the empty history, i.e. it equals the occurrence counts.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::corpus::{Partition, PathCorpus};
use crate::error::{Error, Result};

/// Successor counts of one layer, grouped by history.
///
/// Histories are sorted lexicographically, successors ascending within a
/// history, and zero counts are never stored, so equal tables compare equal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layer {
    order: usize,
    histories: Vec<u32>,
    offsets: Vec<usize>,
    successors: Vec<u32>,
    counts: Vec<u64>,
}

/// One history with its contiguous successor and count slices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Row<'a> {
    pub history: &'a [u32],
    pub successors: &'a [u32],
    pub counts: &'a [u64],
}

impl Row<'_> {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn count(&self, successor: u32) -> u64 {
        self.successors.binary_search(&successor).map_or(0, |i| self.counts[i])
    }
}

impl Layer {
    fn empty(order: usize) -> Self {
        Self { order, histories: Vec::new(), offsets: vec![0], successors: Vec::new(), counts: Vec::new() }
    }

    /// Builds a layer from `(history code, successor, count)` triples; duplicates are summed.
    fn from_coded(order: usize, radix: u64, mut entries: Vec<(u64, u32, u64)>) -> Self {
        entries.sort_unstable_by_key(|&(h, s, _)| (h, s));
        let mut layer = Self::empty(order);
        let mut current = None;
        let mut digits = vec![0u32; order];
        for (code, succ, count) in entries {
            if count == 0 {
                continue;
            }
            if current != Some(code) {
                if current.is_some() {
                    layer.offsets.push(layer.successors.len());
                }
                current = Some(code);
                decode(code, radix, &mut digits);
                layer.histories.extend_from_slice(&digits);
            } else if layer.successors.last() == Some(&succ) {
                *layer.counts.last_mut().unwrap() += count;
                continue;
            }
            layer.successors.push(succ);
            layer.counts.push(count);
        }
        if current.is_some() {
            layer.offsets.push(layer.successors.len());
        }
        layer
    }

    /// Length of every history in this layer.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of distinct histories.
    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, i: usize) -> Row<'_> {
        let (a, b) = (self.offsets[i], self.offsets[i + 1]);
        Row {
            history: &self.histories[i * self.order..(i + 1) * self.order],
            successors: &self.successors[a..b],
            counts: &self.counts[a..b],
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = Row<'_>> + '_ {
        (0..self.len()).map(move |i| self.row(i))
    }

    /// Row for `history`, if it was observed.
    pub fn get(&self, history: &[u32]) -> Option<Row<'_>> {
        if history.len() != self.order {
            return None;
        }
        let (mut lo, mut hi) = (0, self.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.row(mid).history.cmp(history) {
                core::cmp::Ordering::Less => lo = mid + 1,
                core::cmp::Ordering::Greater => hi = mid,
                core::cmp::Ordering::Equal => return Some(self.row(mid)),
            }
        }
        None
    }

    /// Sum of all counts in the layer.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Nested-map view, convenient for assertions.
    pub fn to_map(&self) -> BTreeMap<Vec<u32>, BTreeMap<u32, u64>> {
        self.rows()
            .map(|r| (r.history.to_vec(), r.successors.iter().copied().zip(r.counts.iter().copied()).collect()))
            .collect()
    }
}

fn encode(symbols: impl IntoIterator<Item = u32>, radix: u64) -> u64 {
    symbols.into_iter().fold(0u64, |code, s| code * radix + s as u64)
}

fn decode(mut code: u64, radix: u64, out: &mut [u32]) {
    for slot in out.iter_mut().rev() {
        *slot = (code % radix) as u32;
        code /= radix;
    }
}

fn history_radix(symbols: usize, order: usize) -> Result<u64> {
    let radix = symbols.max(1) as u64;
    radix
        .checked_pow(order as u32)
        .and_then(|m| m.checked_mul(radix))
        .map(|_| radix)
        .ok_or(Error::AlphabetTooLarge { symbols, order })
}

/// Node- or group-level counts for a multi-order model of maximum order `K`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayeredCounts {
    alphabet: usize,
    max_order: usize,
    exact: Vec<Layer>,
    tail: Layer,
    occurrence: Vec<u64>,
}

impl LayeredCounts {
    /// Number of symbols (nodes, or labels after aggregation).
    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// Layer `k < K`: the step at position `k` keyed by its full prefix.
    pub fn exact_layer(&self, k: usize) -> &Layer {
        &self.exact[k]
    }

    pub fn exact_layers(&self) -> &[Layer] {
        &self.exact
    }

    /// Positions `>= K` keyed by their last `K` symbols.
    pub fn tail_layer(&self) -> &Layer {
        &self.tail
    }

    /// Occurrences of each symbol over all path positions.
    pub fn occurrence(&self) -> &[u64] {
        &self.occurrence
    }

    /// Exact layers followed by the tail layer.
    pub fn layers(&self) -> impl Iterator<Item = &Layer> + '_ {
        self.exact.iter().chain(core::iter::once(&self.tail))
    }

    /// Number of paths (count mass of the start layer).
    pub fn paths(&self) -> u64 {
        match self.exact.first() {
            Some(start) => start.total(),
            None => 0,
        }
    }
}

/// Counts every layer up to `max_order` in a single traversal of the corpus.
pub fn build_counts(corpus: &PathCorpus, max_order: usize) -> Result<LayeredCounts> {
    let alphabet = corpus.universe();
    let radix = history_radix(alphabet, max_order)?;
    let mut exact: Vec<Vec<(u64, u32, u64)>> = vec![Vec::new(); max_order];
    let mut tail = Vec::new();
    let mut occurrence = vec![0u64; alphabet];
    for (p, path) in corpus.paths.iter().enumerate() {
        corpus.validate_path(p, path)?;
        for (i, &v) in path.iter().enumerate() {
            occurrence[v as usize] += 1;
            if i < max_order {
                exact[i].push((encode(path[..i].iter().copied(), radix), v, 1));
            } else {
                tail.push((encode(path[i - max_order..i].iter().copied(), radix), v, 1));
            }
        }
    }
    Ok(LayeredCounts {
        alphabet,
        max_order,
        exact: exact.into_iter().enumerate().map(|(k, e)| Layer::from_coded(k, radix, e)).collect(),
        tail: Layer::from_coded(max_order, radix, tail),
        occurrence,
    })
}

fn check_assigned(alphabet: usize, partition: &Partition) -> Result<()> {
    if partition.len() < alphabet {
        return Err(Error::UnassignedNode { node: partition.len() as u32 });
    }
    Ok(())
}

/// Relabels node counts to group counts by summing over each group's members.
pub fn aggregate_counts(node_counts: &LayeredCounts, partition: &Partition) -> Result<LayeredCounts> {
    check_assigned(node_counts.alphabet, partition)?;
    let n_labels = partition.n_labels() as usize;
    let radix = history_radix(n_labels, node_counts.max_order)?;
    let relabel = |layer: &Layer| {
        let entries = layer
            .rows()
            .flat_map(|row| {
                let code = encode(row.history.iter().map(|&v| partition.label(v)), radix);
                row.successors.iter().zip(row.counts).map(move |(&s, &c)| (code, partition.label(s), c))
            })
            .collect();
        Layer::from_coded(layer.order, radix, entries)
    };
    let mut occurrence = vec![0u64; n_labels];
    for (v, &n) in node_counts.occurrence.iter().enumerate() {
        occurrence[partition.label(v as u32) as usize] += n;
    }
    Ok(LayeredCounts {
        alphabet: n_labels,
        max_order: node_counts.max_order,
        exact: node_counts.exact.iter().map(relabel).collect(),
        tail: relabel(&node_counts.tail),
        occurrence,
    })
}

/// Counts as if they had been built with maximum order `order`.
pub fn project_to_order(counts: &LayeredCounts, order: usize) -> Result<LayeredCounts> {
    if order > counts.max_order {
        return Err(Error::OrderTooHigh { requested: order, available: counts.max_order });
    }
    if order == counts.max_order {
        return Ok(counts.clone());
    }
    let radix = history_radix(counts.alphabet, counts.max_order)?;
    let entries = counts.exact[order..]
        .iter()
        .chain(core::iter::once(&counts.tail))
        .flat_map(|layer| layer.rows())
        .flat_map(|row| {
            let code = encode(row.history[row.history.len() - order..].iter().copied(), radix);
            row.successors.iter().zip(row.counts).map(move |(&s, &c)| (code, s, c))
        })
        .collect();
    Ok(LayeredCounts {
        alphabet: counts.alphabet,
        max_order: order,
        exact: counts.exact[..order].to_vec(),
        tail: Layer::from_coded(order, radix, entries),
        occurrence: counts.occurrence.clone(),
    })
}

/// Group-level rows keyed by encoded history, each a dense vector over labels.
pub type GroupRows = BTreeMap<u64, Vec<u64>>;

/// Mutable group-level counts for a partition, kept in step with single-node moves.
///
/// This is the working form used while searching; [`GroupCounts::to_layered`]
/// converts to the canonical [`LayeredCounts`].
#[derive(Debug, Clone)]
pub struct GroupCounts {
    partition: Partition,
    radix: u64,
    max_order: usize,
    exact: Vec<GroupRows>,
    tail: GroupRows,
    occurrence: Vec<u64>,
}

/// Node-level count entries touching each node, for delta updates.
#[derive(Debug, Clone)]
pub struct Incidence {
    // (layer, row, entry) with layer == max_order meaning the tail
    touching: Vec<Vec<(u32, u32, u32)>>,
}

impl Incidence {
    pub fn new(node_counts: &LayeredCounts) -> Self {
        let mut touching = vec![Vec::new(); node_counts.alphabet];
        let mut seen: Vec<u32> = Vec::new();
        for (l, layer) in node_counts.layers().enumerate() {
            for r in 0..layer.len() {
                let row = layer.row(r);
                let base = layer.offsets[r];
                for (j, &s) in row.successors.iter().enumerate() {
                    seen.clear();
                    seen.extend_from_slice(row.history);
                    seen.push(s);
                    seen.sort_unstable();
                    seen.dedup();
                    for &v in &seen {
                        touching[v as usize].push((l as u32, r as u32, (base + j) as u32));
                    }
                }
            }
        }
        Self { touching }
    }

    /// Number of node-level entries involving `node`.
    pub fn degree(&self, node: u32) -> usize {
        self.touching[node as usize].len()
    }
}

impl GroupCounts {
    pub fn new(node_counts: &LayeredCounts, partition: Partition) -> Result<Self> {
        check_assigned(node_counts.alphabet, &partition)?;
        let n_labels = partition.n_labels() as usize;
        let radix = history_radix(n_labels, node_counts.max_order)?;
        let mut out = Self {
            radix,
            max_order: node_counts.max_order,
            exact: vec![GroupRows::new(); node_counts.max_order],
            tail: GroupRows::new(),
            occurrence: vec![0; n_labels],
            partition,
        };
        for (l, layer) in node_counts.layers().enumerate() {
            for row in layer.rows() {
                let code = encode(row.history.iter().map(|&v| out.partition.label(v)), radix);
                let labels = &out.partition;
                let target = if l < out.max_order { &mut out.exact[l] } else { &mut out.tail };
                let dense = target.entry(code).or_insert_with(|| vec![0; n_labels]);
                for (&s, &c) in row.successors.iter().zip(row.counts) {
                    dense[labels.label(s) as usize] += c;
                }
            }
        }
        for (v, &n) in node_counts.occurrence.iter().enumerate() {
            out.occurrence[out.partition.label(v as u32) as usize] += n;
        }
        Ok(out)
    }

    /// Working form of existing group-level counts for `partition`.
    pub fn from_layered(group_counts: &LayeredCounts, partition: Partition) -> Result<Self> {
        let n_labels = partition.n_labels() as usize;
        if group_counts.alphabet != n_labels {
            return Err(Error::SizeMismatch { left: group_counts.alphabet, right: n_labels });
        }
        let radix = history_radix(n_labels, group_counts.max_order)?;
        let convert = |layer: &Layer| {
            let mut rows = GroupRows::new();
            for row in layer.rows() {
                let dense = rows.entry(encode(row.history.iter().copied(), radix)).or_insert_with(|| vec![0; n_labels]);
                for (&s, &c) in row.successors.iter().zip(row.counts) {
                    dense[s as usize] += c;
                }
            }
            rows
        };
        Ok(Self {
            radix,
            max_order: group_counts.max_order,
            exact: group_counts.exact.iter().map(convert).collect(),
            tail: convert(&group_counts.tail),
            occurrence: group_counts.occurrence.clone(),
            partition,
        })
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn n_labels(&self) -> usize {
        self.partition.n_labels() as usize
    }

    pub(crate) fn radix(&self) -> u64 {
        self.radix
    }

    pub fn exact_rows(&self, k: usize) -> &GroupRows {
        &self.exact[k]
    }

    pub fn tail_rows(&self) -> &GroupRows {
        &self.tail
    }

    pub fn occurrence(&self) -> &[u64] {
        &self.occurrence
    }

    fn shift(&mut self, node_counts: &LayeredCounts, entries: &[(u32, u32, u32)], add: bool) {
        let n_labels = self.n_labels();
        for &(l, r, e) in entries {
            let layer = if (l as usize) < self.max_order { &node_counts.exact[l as usize] } else { &node_counts.tail };
            let row = layer.row(r as usize);
            let code = encode(row.history.iter().map(|&v| self.partition.label(v)), self.radix);
            let succ = self.partition.label(layer.successors[e as usize]) as usize;
            let count = layer.counts[e as usize];
            let target = if (l as usize) < self.max_order { &mut self.exact[l as usize] } else { &mut self.tail };
            let dense = target.entry(code).or_insert_with(|| vec![0; n_labels]);
            if add {
                dense[succ] += count;
            } else {
                dense[succ] -= count;
                if dense.iter().all(|&c| c == 0) {
                    target.remove(&code);
                }
            }
        }
    }

    /// Moves `node` to `label`, touching only entries that involve the node.
    pub fn move_node(&mut self, node_counts: &LayeredCounts, incidence: &Incidence, node: u32, label: u32) -> Result<()> {
        let old = self.partition.try_label(node)?;
        if old == label {
            return Ok(());
        }
        if label >= self.partition.n_labels() {
            return Err(Error::LabelOutOfRange { node, label, n_labels: self.partition.n_labels() });
        }
        let entries = &incidence.touching[node as usize];
        self.shift(node_counts, entries, false);
        self.partition.set_label(node, label)?;
        self.shift(node_counts, entries, true);
        let n = node_counts.occurrence[node as usize];
        self.occurrence[old as usize] -= n;
        self.occurrence[label as usize] += n;
        Ok(())
    }

    /// Canonical group-level counts.
    pub fn to_layered(&self) -> LayeredCounts {
        let convert = |order: usize, rows: &GroupRows| {
            let entries = rows
                .iter()
                .flat_map(|(&code, dense)| dense.iter().enumerate().map(move |(g, &c)| (code, g as u32, c)))
                .collect();
            Layer::from_coded(order, self.radix, entries)
        };
        LayeredCounts {
            alphabet: self.n_labels(),
            max_order: self.max_order,
            exact: self.exact.iter().enumerate().map(|(k, rows)| convert(k, rows)).collect(),
            tail: convert(self.max_order, &self.tail),
            occurrence: self.occurrence.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeMap;

    type Entry<'a> = (&'a [u32], &'a [(u32, u64)]);

    fn map(entries: &[Entry])  -> BTreeMap<Vec<u32>, BTreeMap<u32, u64>> {
        entries.iter().map(|(h, s)| (h.to_vec(), s.iter().copied().collect())).collect()
    }

    #[test]
    fn single_path_counts() {
        // a=0, b=1
        let corpus = PathCorpus::from_tokens([["a", "b", "a"]]);
        let c = build_counts(&corpus, 1).unwrap();
        assert_eq!(c.exact_layer(0).to_map(), map(&[(&[], &[(0, 1)])]));
        assert_eq!(c.tail_layer().to_map(), map(&[(&[0], &[(1, 1)]), (&[1], &[(0, 1)])]));
        assert_eq!(c.occurrence(), &[2, 1]);
    }

    #[test]
    fn single_node_path_has_no_transitions() {
        let corpus = PathCorpus::from_tokens([["a"]]);
        let c = build_counts(&corpus, 2).unwrap();
        assert_eq!(c.exact_layer(0).to_map(), map(&[(&[], &[(0, 1)])]));
        assert!(c.exact_layer(1).is_empty());
        assert!(c.tail_layer().is_empty());
        assert_eq!(c.occurrence(), &[1]);
    }

    #[test]
    fn constraint_violation_is_rejected() {
        let corpus = PathCorpus::from_tokens([["a", "b"]]).with_constraint([(1, 0)].into_iter().collect());
        assert!(matches!(build_counts(&corpus, 1), Err(Error::ConstraintViolation { from: 0, to: 1, .. })));
    }

    #[test]
    fn two_path_aggregation() {
        // a=0 b=1 c=2 d=3; {a,c} -> 0, {b,d} -> 1
        let corpus = PathCorpus::from_tokens([["a", "b"], ["c", "d"]]);
        let c = build_counts(&corpus, 1).unwrap();
        let g = aggregate_counts(&c, &Partition::new(vec![0, 1, 0, 1], 2).unwrap()).unwrap();
        assert_eq!(g.tail_layer().to_map(), map(&[(&[0], &[(1, 2)])]));
        assert_eq!(g.occurrence(), &[2, 2]);
    }

    #[test]
    fn single_group_collapses_every_layer() {
        let corpus = PathCorpus::from_tokens([vec!["a", "b", "c"], vec!["c", "a"], vec!["b"]]);
        let c = build_counts(&corpus, 2).unwrap();
        let g = aggregate_counts(&c, &Partition::single_group(3)).unwrap();
        for (node_layer, group_layer) in c.layers().zip(g.layers()) {
            assert!(group_layer.len() <= 1);
            assert_eq!(node_layer.total(), group_layer.total());
            for row in group_layer.rows() {
                assert_eq!(row.successors, &[0]);
            }
        }
    }

    #[test]
    fn identity_partition_reproduces_counts() {
        let corpus = PathCorpus::from_tokens([vec!["a", "b", "c", "a"], vec!["c", "a"]]);
        let c = build_counts(&corpus, 2).unwrap();
        assert_eq!(aggregate_counts(&c, &Partition::singletons(3)).unwrap(), c);
    }

    #[test]
    fn projection_matches_direct_build() {
        let corpus = PathCorpus::from_tokens([["a", "b", "c"]]);
        let c2 = build_counts(&corpus, 2).unwrap();
        let p = project_to_order(&c2, 1).unwrap();
        assert_eq!(p.tail_layer().to_map(), map(&[(&[0], &[(1, 1)]), (&[1], &[(2, 1)])]));
        assert_eq!(p, build_counts(&corpus, 1).unwrap());
        assert_eq!(project_to_order(&c2, 2).unwrap(), c2);
        assert!(matches!(project_to_order(&c2, 3), Err(Error::OrderTooHigh { requested: 3, available: 2 })));
    }

    #[test]
    fn order_zero_projection_equals_occurrence() {
        let corpus = PathCorpus::from_tokens([vec!["a", "b", "a", "c"], vec!["b"]]);
        let c = build_counts(&corpus, 3).unwrap();
        let p = project_to_order(&c, 0).unwrap();
        let row = p.tail_layer().get(&[]).unwrap();
        for v in 0..3u32 {
            assert_eq!(row.count(v), c.occurrence()[v as usize]);
        }
    }

    #[test]
    fn unassigned_node_is_named() {
        let corpus = PathCorpus::from_tokens([["a", "b", "c"]]);
        let c = build_counts(&corpus, 1).unwrap();
        let short = Partition::from_labels(vec![0, 0]);
        assert_eq!(aggregate_counts(&c, &short).unwrap_err(), Error::UnassignedNode { node: 2 });
    }

    #[test]
    fn moving_an_unobserved_node_changes_nothing() {
        let mut corpus = PathCorpus::from_tokens([["a", "b", "a"]]);
        corpus.nodes.intern("ghost");
        let c = build_counts(&corpus, 2).unwrap();
        let inc = Incidence::new(&c);
        let mut g = GroupCounts::new(&c, Partition::new(vec![0, 1, 0], 2).unwrap()).unwrap();
        let before = g.to_layered();
        g.move_node(&c, &inc, 2, 1).unwrap();
        assert_eq!(g.to_layered(), before);
    }

    #[test]
    fn move_and_back_is_exact() {
        let corpus = PathCorpus::from_tokens([vec!["a", "b", "a", "a", "c"], vec!["c", "a", "b"]]);
        let c = build_counts(&corpus, 2).unwrap();
        let inc = Incidence::new(&c);
        let mut g = GroupCounts::new(&c, Partition::new(vec![0, 1, 1], 3).unwrap()).unwrap();
        let start = g.to_layered();
        g.move_node(&c, &inc, 0, 2).unwrap();
        assert_ne!(g.to_layered(), start);
        assert_eq!(g.to_layered(), aggregate_counts(&c, g.partition()).unwrap());
        g.move_node(&c, &inc, 0, 0).unwrap();
        assert_eq!(g.to_layered(), start);
    }
}
