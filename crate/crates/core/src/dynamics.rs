//! Multi-order group dynamics: per-history Dirichlet-multinomial evidence,
//! successor sets induced by a graph, and Bayes-factor order selection.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::corpus::{GraphConstraint, Partition};
use crate::counts::{project_to_order, GroupCounts, GroupRows, LayeredCounts};
use crate::error::{Error, Result};
use crate::special::log_dirichlet_multinomial;

/// How successor sets are derived from a partition.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum SuccessorRule {
    /// Every occupied group may follow any history.
    #[default]
    Free,
    /// A group may follow a history if some edge leads from a member of the
    /// history's last group into it.
    Graph(GraphConstraint),
}

impl SuccessorRule {
    pub fn build(&self, partition: &Partition) -> SuccessorSet {
        match self {
            SuccessorRule::Free => SuccessorSet::unconstrained(partition),
            SuccessorRule::Graph(graph) => SuccessorSet::from_graph(graph, partition),
        }
    }
}

/// Permitted successor groups of each history.
///
/// The empty history admits every occupied group. Under a graph constraint a
/// non-empty history's set depends only on its last group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuccessorSet {
    occupied: Vec<bool>,
    n_occupied: usize,
    after: Option<Vec<(Vec<bool>, usize)>>,
}

impl SuccessorSet {
    pub fn unconstrained(partition: &Partition) -> Self {
        let occupied = partition.occupied();
        let n_occupied = occupied.iter().filter(|&&o| o).count();
        Self { occupied, n_occupied, after: None }
    }

    pub fn from_graph(graph: &GraphConstraint, partition: &Partition) -> Self {
        let mut set = Self::unconstrained(partition);
        let n = partition.n_labels() as usize;
        let mut after = vec![vec![false; n]; n];
        for (v, w) in graph.edges() {
            if (v as usize) < partition.len() && (w as usize) < partition.len() {
                after[partition.label(v) as usize][partition.label(w) as usize] = true;
            }
        }
        set.after = Some(after.into_iter().map(|row| {
            let size = row.iter().filter(|&&b| b).count();
            (row, size)
        }).collect());
        set
    }

    /// Membership mask and size of the set following a history with this last group.
    pub fn after(&self, last: Option<u32>) -> (&[bool], usize) {
        match (&self.after, last) {
            (Some(after), Some(g)) => match after.get(g as usize) {
                Some((mask, size)) => (mask, *size),
                None => (&[], 0),
            },
            _ => (&self.occupied, self.n_occupied),
        }
    }

    pub fn contains(&self, history: &[u32], group: u32) -> bool {
        self.after(history.last().copied()).0.get(group as usize).copied().unwrap_or(false)
    }

    pub fn size(&self, history: &[u32]) -> usize {
        self.after(history.last().copied()).1
    }

    /// Members of the set in ascending label order.
    pub fn members(&self, history: &[u32]) -> Vec<u32> {
        let (mask, _) = self.after(history.last().copied());
        mask.iter().enumerate().filter(|(_, &b)| b).map(|(g, _)| g as u32).collect()
    }
}

fn row_evidence<I>(history: impl Fn() -> Vec<u32>, last: Option<u32>, counts: I, succ: &SuccessorSet) -> Result<f64>
where
    I: Iterator<Item = (u32, u64)> + Clone,
{
    let (mask, size) = succ.after(last);
    if let Some((g, _)) = counts.clone().find(|&(g, n)| n > 0 && !mask.get(g as usize).copied().unwrap_or(false)) {
        return Err(Error::SuccessorOutsideSet { history: history(), successor: g });
    }
    Ok(log_dirichlet_multinomial(counts.map(|(_, n)| n), size))
}

/// Log evidence of group paths under a multi-order model of maximum order `order`.
///
/// Sums the Dirichlet-multinomial evidence of every observed history in
/// exact layers `0..order` and in the tail projected to length `order`.
pub fn mon_log_marginal(group_counts: &LayeredCounts, order: usize, succ: &SuccessorSet) -> Result<f64> {
    let counts = project_to_order(group_counts, order)?;
    let mut total = 0.0;
    for layer in counts.layers() {
        for row in layer.rows() {
            let pairs = row.successors.iter().copied().zip(row.counts.iter().copied());
            total += row_evidence(|| row.history.to_vec(), row.history.last().copied(), pairs, succ)?;
        }
    }
    Ok(total)
}

fn rows_evidence(rows: &GroupRows, radix: u64, order: usize, succ: &SuccessorSet) -> Result<f64> {
    let mut total = 0.0;
    for (&code, dense) in rows {
        let last = (order > 0).then(|| (code % radix) as u32);
        let pairs = dense.iter().enumerate().map(|(g, &n)| (g as u32, n));
        total += row_evidence(|| decode_history(code, radix, order), last, pairs, succ)?;
    }
    Ok(total)
}

fn decode_history(mut code: u64, radix: u64, order: usize) -> Vec<u32> {
    let mut out = vec![0u32; order];
    for slot in out.iter_mut().rev() {
        *slot = (code % radix) as u32;
        code /= radix;
    }
    out
}

fn projected_rows(counts: &GroupCounts, order: usize) -> GroupRows {
    let modulus = counts.radix().pow(order as u32);
    let mut out: GroupRows = BTreeMap::new();
    let sources = (order..counts.max_order()).map(|k| counts.exact_rows(k)).chain(core::iter::once(counts.tail_rows()));
    for rows in sources {
        for (&code, dense) in rows {
            let slot = out.entry(code % modulus).or_insert_with(|| vec![0; dense.len()]);
            for (acc, &n) in slot.iter_mut().zip(dense) {
                *acc += n;
            }
        }
    }
    out
}

fn tail_evidence(counts: &GroupCounts, order: usize, succ: &SuccessorSet) -> Result<f64> {
    if order == counts.max_order() {
        rows_evidence(counts.tail_rows(), counts.radix(), order, succ)
    } else {
        rows_evidence(&projected_rows(counts, order), counts.radix(), order, succ)
    }
}

/// Dynamics log evidence at a single order, straight from working group counts.
pub(crate) fn grouped_log_marginal(counts: &GroupCounts, order: usize, succ: &SuccessorSet) -> Result<f64> {
    if order > counts.max_order() {
        return Err(Error::OrderTooHigh { requested: order, available: counts.max_order() });
    }
    let mut total = tail_evidence(counts, order, succ)?;
    for k in 0..order {
        total += rows_evidence(counts.exact_rows(k), counts.radix(), k, succ)?;
    }
    Ok(total)
}

/// Dynamics log evidence for every order `0..=up_to`, sharing the exact-layer terms.
pub(crate) fn grouped_log_marginals(counts: &GroupCounts, up_to: usize, succ: &SuccessorSet) -> Result<Vec<f64>> {
    if up_to > counts.max_order() {
        return Err(Error::OrderTooHigh { requested: up_to, available: counts.max_order() });
    }
    let mut out = Vec::with_capacity(up_to + 1);
    let mut prefix = 0.0;
    for k in 0..=up_to {
        out.push(prefix + tail_evidence(counts, k, succ)?);
        if k < up_to {
            prefix += rows_evidence(counts.exact_rows(k), counts.radix(), k, succ)?;
        }
    }
    Ok(out)
}

/// Outcome of the sequential Bayes-factor test over orders `0..=K`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderSelection {
    /// Highest order reached by consecutive accepted steps from 0.
    pub selected: usize,
    /// Log evidence of each order.
    pub log_marginals: Vec<f64>,
    /// `ln B` of order `k + 1` against order `k`.
    pub log_bayes_factors: Vec<f64>,
    pub threshold: f64,
}

impl OrderSelection {
    /// Walks the ladder `0 -> 1 -> ...`, stopping at the first step whose
    /// Bayes factor does not exceed `threshold`.
    pub fn from_log_marginals(log_marginals: Vec<f64>, threshold: f64) -> Self {
        let log_bayes_factors: Vec<f64> = log_marginals.windows(2).map(|w| w[1] - w[0]).collect();
        let cut = libm::log(threshold);
        let selected = log_bayes_factors.iter().take_while(|&&lbf| lbf > cut).count();
        Self { selected, log_marginals, log_bayes_factors, threshold }
    }

    pub fn selected_log_marginal(&self) -> f64 {
        self.log_marginals[self.selected]
    }

    /// Whether the step from `k` to `k + 1` passed the test.
    pub fn accepted(&self, k: usize) -> bool {
        k < self.selected
    }
}

pub fn select_order(group_counts: &LayeredCounts, max_order: usize, succ: &SuccessorSet, threshold: f64) -> Result<OrderSelection> {
    if max_order > group_counts.max_order() {
        return Err(Error::OrderTooHigh { requested: max_order, available: group_counts.max_order() });
    }
    let log_marginals = (0..=max_order).map(|k| mon_log_marginal(group_counts, k, succ)).collect::<Result<Vec<_>>>()?;
    Ok(OrderSelection::from_log_marginals(log_marginals, threshold))
}

/// Posterior Dirichlet concentrations `1 + n` of every history of a model of order `K`.
///
/// Histories never observed carry the prior, a vector of ones over their successor set.
#[derive(Debug, Clone, PartialEq)]
pub struct MonPosterior {
    counts: LayeredCounts,
    successors: SuccessorSet,
}

pub fn mon_posterior(group_counts: &LayeredCounts, order: usize, succ: &SuccessorSet) -> Result<MonPosterior> {
    // validates successors along the way
    mon_log_marginal(group_counts, order, succ)?;
    Ok(MonPosterior { counts: project_to_order(group_counts, order)?, successors: succ.clone() })
}

impl MonPosterior {
    pub fn order(&self) -> usize {
        self.counts.max_order()
    }

    pub fn successors(&self) -> &SuccessorSet {
        &self.successors
    }

    /// The conditioning history for the next step after `prefix`.
    pub fn context<'a>(&self, prefix: &'a [u32]) -> &'a [u32] {
        let k = self.order();
        if prefix.len() < k {
            prefix
        } else {
            &prefix[prefix.len() - k..]
        }
    }

    /// `(group, alpha)` over the successor set of `history` (length at most `K`).
    pub fn alpha(&self, history: &[u32]) -> Vec<(u32, f64)> {
        let layer = if history.len() < self.order() {
            self.counts.exact_layer(history.len())
        } else {
            self.counts.tail_layer()
        };
        let row = layer.get(history);
        self.successors
            .members(history)
            .into_iter()
            .map(|g| (g, 1.0 + row.map_or(0, |r| r.count(g)) as f64))
            .collect()
    }

    /// Posterior-mean probability of `group` after `history`; `None` if not permitted.
    pub fn predictive(&self, history: &[u32], group: u32) -> Option<f64> {
        let alpha = self.alpha(history);
        let total: f64 = alpha.iter().map(|(_, a)| a).sum();
        alpha.iter().find(|(g, _)| *g == group).map(|(_, a)| a / total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::PathCorpus;
    use crate::counts::{aggregate_counts, build_counts};

    fn group_counts(paths: &[&[&str]], max_order: usize) -> (LayeredCounts, Partition) {
        let corpus = PathCorpus::from_tokens(paths.iter().map(|p| p.iter().copied()));
        let p = Partition::singletons(corpus.universe());
        (build_counts(&corpus, max_order).unwrap(), p)
    }

    #[test]
    fn two_group_example() {
        // g=0, h=1; paths (g,h), (g,g)
        let (c, p) = group_counts(&[&["g", "h"], &["g", "g"]], 1);
        let v = mon_log_marginal(&c, 1, &SuccessorSet::unconstrained(&p)).unwrap();
        assert!((v - libm::log(1.0 / 18.0)).abs() < 1e-12);
        assert!((v - (-2.890_371_757_896_164_7)).abs() < 1e-12);
    }

    #[test]
    fn single_group_is_certain() {
        let corpus = PathCorpus::from_tokens([vec!["a", "b", "c", "a"], vec!["b", "b"]]);
        let nodes = build_counts(&corpus, 2).unwrap();
        let one = Partition::single_group(3);
        let g = aggregate_counts(&nodes, &one).unwrap();
        for k in 0..=2 {
            assert_eq!(mon_log_marginal(&g, k, &SuccessorSet::unconstrained(&one)).unwrap(), 0.0);
        }
    }

    #[test]
    fn empty_corpus_selects_order_zero() {
        let c = build_counts(&PathCorpus::new(crate::NodeTable::numbered("v", 3)), 3).unwrap();
        let sel = select_order(&c, 3, &SuccessorSet::unconstrained(&Partition::singletons(3)), 150.0).unwrap();
        assert_eq!(sel.selected, 0);
        assert!(sel.log_marginals.iter().all(|&v| v == 0.0));
        assert!(sel.log_bayes_factors.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ladder_stops_at_first_rejection() {
        let cut = libm::log(150.0);
        let sel = OrderSelection::from_log_marginals(vec![0.0, cut + 1.0, cut + 1.5, 10.0 * cut], 150.0);
        // 0 -> 1 accepted, 1 -> 2 rejected, 2 -> 3 would pass but is never reached
        assert_eq!(sel.selected, 1);
        assert!(sel.accepted(0) && !sel.accepted(1));
    }

    #[test]
    fn posterior_update_and_prior() {
        let (c, p) = group_counts(&[&["g", "h"], &["g", "g"]], 1);
        let post = mon_posterior(&c, 1, &SuccessorSet::unconstrained(&p)).unwrap();
        assert_eq!(post.alpha(&[0]), vec![(0, 2.0), (1, 2.0)]);
        // h never precedes anything
        assert_eq!(post.alpha(&[1]), vec![(0, 1.0), (1, 1.0)]);
        assert_eq!(post.alpha(&[]), vec![(0, 3.0), (1, 1.0)]);
    }

    #[test]
    fn single_permitted_successor_is_certain() {
        let paths: [&[&str]; 5] = [&["g", "h"]; 5];
        let (c, p) = group_counts(&paths, 1);
        let graph: GraphConstraint = [(0, 1), (1, 0)].into_iter().collect();
        let succ = SuccessorSet::from_graph(&graph, &p);
        let post = mon_posterior(&c, 1, &succ).unwrap();
        assert_eq!(post.alpha(&[0]), vec![(1, 6.0)]);
        assert_eq!(post.predictive(&[0], 1), Some(1.0));
        assert_eq!(post.predictive(&[0], 0), None);
    }

    #[test]
    fn successor_outside_set_is_reported() {
        let (c, p) = group_counts(&[&["g", "h"]], 1);
        let graph: GraphConstraint = [(0, 0)].into_iter().collect();
        let err = mon_log_marginal(&c, 1, &SuccessorSet::from_graph(&graph, &p)).unwrap_err();
        assert_eq!(err, Error::SuccessorOutsideSet { history: vec![0], successor: 1 });
    }

    #[test]
    fn grouped_path_agrees_with_layered_path() {
        let corpus = PathCorpus::from_tokens([vec!["a", "b", "c", "a", "b"], vec!["c", "c", "a"], vec!["b", "a"]]);
        let nodes = build_counts(&corpus, 3).unwrap();
        let part = Partition::new(vec![0, 2, 0], 3).unwrap();
        let succ = SuccessorSet::unconstrained(&part);
        let working = GroupCounts::new(&nodes, part.clone()).unwrap();
        let layered = aggregate_counts(&nodes, &part).unwrap();
        let all = grouped_log_marginals(&working, 3, &succ).unwrap();
        for (k, &value) in all.iter().enumerate() {
            let direct = mon_log_marginal(&layered, k, &succ).unwrap();
            assert!((value - direct).abs() < 1e-12);
            assert!((grouped_log_marginal(&working, k, &succ).unwrap() - direct).abs() < 1e-12);
        }
    }
}
