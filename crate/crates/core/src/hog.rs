//! The joint model: emission and group dynamics share one group map, so the
//! evidence of a partition is the sum of both log evidences.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::corpus::Partition;
use crate::counts::{aggregate_counts, GroupCounts, LayeredCounts};
use crate::dynamics::{grouped_log_marginal, grouped_log_marginals, mon_posterior, MonPosterior, OrderSelection, SuccessorRule};
use crate::emission::{emission_log_marginal, emission_posterior, EmissionPosterior};
use crate::error::{Error, Result};
use crate::DEFAULT_BF_THRESHOLD;

/// Which Markov order a partition is scored at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScoringMode {
    /// Re-select the order for every partition with the Bayes-factor ladder.
    Ladder { max_order: usize, bf_threshold: f64 },
    /// Score every partition at one order.
    Fixed { order: usize },
}

impl ScoringMode {
    pub fn ladder(max_order: usize) -> Self {
        ScoringMode::Ladder { max_order, bf_threshold: DEFAULT_BF_THRESHOLD }
    }

    /// Highest order the node counts must cover.
    pub fn max_order(&self) -> usize {
        match *self {
            ScoringMode::Ladder { max_order, .. } => max_order,
            ScoringMode::Fixed { order } => order,
        }
    }
}

/// A partition with its selected order and log evidence.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPartition {
    pub partition: Partition,
    pub order: usize,
    /// Emission plus dynamics log evidence at `order`.
    pub log_marginal: f64,
    pub emission_log_marginal: f64,
    pub dynamics_log_marginal: f64,
    /// Per-order dynamics evidence and ladder decisions; absent in fixed-order mode.
    pub selection: Option<OrderSelection>,
}

impl ScoredPartition {
    pub fn effective_groups(&self) -> usize {
        self.partition.effective_groups()
    }

    /// Joint log evidence at every order of the ladder.
    pub fn log_marginals_by_order(&self) -> Option<Vec<f64>> {
        self.selection
            .as_ref()
            .map(|s| s.log_marginals.iter().map(|d| d + self.emission_log_marginal).collect())
    }

    /// Ranking used to report one winner: higher evidence, then fewer groups,
    /// then lower order, then the lexicographically smaller canonical labeling.
    pub fn rank(&self, other: &ScoredPartition) -> Ordering {
        self.log_marginal
            .partial_cmp(&other.log_marginal)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.effective_groups().cmp(&self.effective_groups()))
            .then_with(|| other.order.cmp(&self.order))
            .then_with(|| other.partition.canonical().labels().cmp(self.partition.canonical().labels()))
    }

    pub fn better_than(&self, other: &ScoredPartition) -> bool {
        self.rank(other) == Ordering::Greater
    }
}

/// Scores partitions against fixed node-level counts.
#[derive(Debug, Clone, Copy)]
pub struct Scorer<'a> {
    node_counts: &'a LayeredCounts,
    rule: &'a SuccessorRule,
    mode: ScoringMode,
}

impl<'a> Scorer<'a> {
    pub fn new(node_counts: &'a LayeredCounts, rule: &'a SuccessorRule, mode: ScoringMode) -> Result<Self> {
        if mode.max_order() > node_counts.max_order() {
            return Err(Error::OrderTooHigh { requested: mode.max_order(), available: node_counts.max_order() });
        }
        Ok(Self { node_counts, rule, mode })
    }

    pub fn node_counts(&self) -> &'a LayeredCounts {
        self.node_counts
    }

    pub fn rule(&self) -> &'a SuccessorRule {
        self.rule
    }

    pub fn mode(&self) -> ScoringMode {
        self.mode
    }

    pub fn score(&self, partition: &Partition) -> Result<ScoredPartition> {
        let grouped = GroupCounts::new(self.node_counts, partition.clone())?;
        self.score_grouped(&grouped)
    }

    /// Scores working group counts that already reflect their partition.
    pub fn score_grouped(&self, grouped: &GroupCounts) -> Result<ScoredPartition> {
        let partition = grouped.partition();
        let emission = emission_log_marginal(self.node_counts.occurrence(), partition)?;
        let succ = self.rule.build(partition);
        let (order, dynamics, selection) = match self.mode {
            ScoringMode::Ladder { max_order, bf_threshold } => {
                let sel = OrderSelection::from_log_marginals(grouped_log_marginals(grouped, max_order, &succ)?, bf_threshold);
                (sel.selected, sel.selected_log_marginal(), Some(sel))
            }
            ScoringMode::Fixed { order } => (order, grouped_log_marginal(grouped, order, &succ)?, None),
        };
        Ok(ScoredPartition {
            partition: partition.clone(),
            order,
            log_marginal: emission + dynamics,
            emission_log_marginal: emission,
            dynamics_log_marginal: dynamics,
            selection,
        })
    }
}

/// Aggregates node counts under `partition` and scores it.
pub fn score_partition(node_counts: &LayeredCounts, partition: &Partition, mode: ScoringMode, rule: &SuccessorRule) -> Result<ScoredPartition> {
    Scorer::new(node_counts, rule, mode)?.score(partition)
}

/// Posterior of the joint model for one partition at one order.
#[derive(Debug, Clone, PartialEq)]
pub struct HogModel {
    pub partition: Partition,
    pub emission: EmissionPosterior,
    pub dynamics: MonPosterior,
    pub order: usize,
}

impl HogModel {
    pub fn fit(node_counts: &LayeredCounts, partition: &Partition, order: usize, rule: &SuccessorRule) -> Result<Self> {
        let grouped = aggregate_counts(node_counts, partition)?;
        Ok(Self {
            partition: partition.clone(),
            emission: emission_posterior(node_counts.occurrence(), partition)?,
            dynamics: mon_posterior(&grouped, order, &rule.build(partition))?,
            order,
        })
    }
}

/// Probabilities a path likelihood is evaluated under.
pub trait PathProbabilities {
    fn group_of(&self, node: u32) -> Option<u32>;
    /// Maximum Markov order of the group dynamics.
    fn order(&self) -> usize;
    /// Probability that the node's own group emits it.
    fn emission(&self, node: u32) -> f64;
    /// Probability of `group` following `history`; `None` if not permitted.
    /// `history` is the full prefix below the order, otherwise the last `order` groups.
    fn transition(&self, history: &[u32], group: u32) -> Option<f64>;
}

/// Posterior-mean probabilities.
impl PathProbabilities for HogModel {
    fn group_of(&self, node: u32) -> Option<u32> {
        self.partition.labels().get(node as usize).copied()
    }

    fn order(&self) -> usize {
        self.order
    }

    fn emission(&self, node: u32) -> f64 {
        self.emission.mean(node)
    }

    fn transition(&self, history: &[u32], group: u32) -> Option<f64> {
        self.dynamics.predictive(history, group)
    }
}

/// A step whose group is outside the successor set of its history.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForbiddenStep {
    pub position: usize,
    pub history: Vec<u32>,
    pub group: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathLikelihood {
    /// `-inf` when a step is forbidden.
    pub log_likelihood: f64,
    pub forbidden: Option<ForbiddenStep>,
}

/// Log probability of a node path: one emission factor per node plus one
/// group-dynamics factor per position, using the full prefix for the first
/// `K` positions and the last `K` groups afterwards.
pub fn hog_path_log_likelihood<M: PathProbabilities + ?Sized>(model: &M, path: &[u32]) -> Result<PathLikelihood> {
    let groups = path
        .iter()
        .map(|&v| model.group_of(v).ok_or(Error::UnassignedNode { node: v }))
        .collect::<Result<Vec<_>>>()?;
    let k = model.order();
    let mut total = 0.0;
    for (i, (&v, &g)) in path.iter().zip(&groups).enumerate() {
        let history = if i < k { &groups[..i] } else { &groups[i - k..i] };
        match model.transition(history, g) {
            Some(p) => total += libm::log(p) + libm::log(model.emission(v)),
            None => {
                return Ok(PathLikelihood {
                    log_likelihood: f64::NEG_INFINITY,
                    forbidden: Some(ForbiddenStep { position: i, history: history.to_vec(), group: g }),
                })
            }
        }
    }
    Ok(PathLikelihood { log_likelihood: total, forbidden: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{GraphConstraint, PathCorpus};
    use crate::counts::build_counts;
    use alloc::vec;

    fn corpus() -> PathCorpus {
        PathCorpus::from_tokens([vec!["a", "b", "c", "a", "b"], vec!["c", "b", "a"], vec!["b", "c", "c", "a"]])
    }

    #[test]
    fn one_group_scores_emission_only() {
        let c = build_counts(&corpus(), 2).unwrap();
        let s = score_partition(&c, &Partition::single_group(3), ScoringMode::ladder(2), &SuccessorRule::Free).unwrap();
        assert_eq!(s.dynamics_log_marginal, 0.0);
        assert_eq!(s.log_marginal, s.emission_log_marginal);
        assert_eq!(s.order, 0);
    }

    #[test]
    fn singletons_score_dynamics_only() {
        let c = build_counts(&corpus(), 2).unwrap();
        let s = score_partition(&c, &Partition::singletons(3), ScoringMode::ladder(2), &SuccessorRule::Free).unwrap();
        assert_eq!(s.emission_log_marginal, 0.0);
        assert_eq!(s.log_marginal, s.dynamics_log_marginal);
    }

    #[test]
    fn rank_breaks_ties_by_groups_then_order() {
        let base = ScoredPartition {
            partition: Partition::from_labels(vec![0, 1, 1]),
            order: 1,
            log_marginal: -3.0,
            emission_log_marginal: 0.0,
            dynamics_log_marginal: -3.0,
            selection: None,
        };
        let more_groups = ScoredPartition { partition: Partition::from_labels(vec![0, 1, 2]), ..base.clone() };
        let higher_order = ScoredPartition { order: 2, ..base.clone() };
        let better = ScoredPartition { log_marginal: -2.0, ..more_groups.clone() };
        assert!(base.better_than(&more_groups));
        assert!(base.better_than(&higher_order));
        assert!(better.better_than(&base));
        let relabeled = ScoredPartition { partition: Partition::from_labels(vec![1, 0, 0]), ..base.clone() };
        assert_eq!(base.rank(&relabeled), Ordering::Equal);
    }

    #[test]
    fn fixed_mode_has_no_selection() {
        let c = build_counts(&corpus(), 2).unwrap();
        let p = Partition::from_labels(vec![0, 1, 1]);
        let s = score_partition(&c, &p, ScoringMode::Fixed { order: 2 }, &SuccessorRule::Free).unwrap();
        assert!(s.selection.is_none());
        assert_eq!(s.order, 2);
        let ladder = score_partition(&c, &p, ScoringMode::ladder(2), &SuccessorRule::Free).unwrap();
        let per_order = ladder.log_marginals_by_order().unwrap();
        assert!((per_order[2] - s.log_marginal).abs() < 1e-12);
    }

    #[test]
    fn scorer_rejects_insufficient_counts() {
        let c = build_counts(&corpus(), 1).unwrap();
        assert!(matches!(
            Scorer::new(&c, &SuccessorRule::Free, ScoringMode::ladder(2)),
            Err(Error::OrderTooHigh { requested: 2, available: 1 })
        ));
    }

    #[test]
    fn one_group_path_likelihood_is_uniform_emission() {
        // 4 nodes, every node observed once: posterior means are all 1/4
        let corpus = PathCorpus::from_tokens([["a", "b", "c", "d"]]);
        let c = build_counts(&corpus, 1).unwrap();
        let model = HogModel::fit(&c, &Partition::single_group(4), 1, &SuccessorRule::Free).unwrap();
        let ll = hog_path_log_likelihood(&model, &[0, 2, 1]).unwrap();
        assert!((ll.log_likelihood - 3.0 * libm::log(0.25)).abs() < 1e-12);
    }

    #[test]
    fn forbidden_step_gives_negative_infinity() {
        let corpus = PathCorpus::from_tokens([["a", "b"]]).with_constraint([(0, 1)].into_iter().collect::<GraphConstraint>());
        let graph = corpus.constraint.clone().unwrap();
        let c = build_counts(&corpus, 1).unwrap();
        let model = HogModel::fit(&c, &Partition::singletons(2), 1, &SuccessorRule::Graph(graph)).unwrap();
        let ll = hog_path_log_likelihood(&model, &[1, 0]).unwrap();
        assert_eq!(ll.log_likelihood, f64::NEG_INFINITY);
        assert_eq!(ll.forbidden, Some(ForbiddenStep { position: 1, history: vec![1], group: 0 }));
    }
}
