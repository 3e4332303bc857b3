//! Partition search: exhaustive enumeration of set partitions for small
//! universes and a single-node-move Metropolis-Hastings chain otherwise.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::corpus::Partition;
use crate::counts::{GroupCounts, Incidence, LayeredCounts};
use crate::dynamics::SuccessorRule;
use crate::error::{invalid, Error, Result};
use crate::eval::ami;
use crate::hog::{ScoredPartition, Scorer, ScoringMode};
use crate::rng::{chain_stream, substream};

/// Largest number of partitions [`exhaustive_search`] will enumerate.
pub const EXHAUSTIVE_LIMIT: u128 = 10_000_000;

/// Number of set partitions of `n` elements into at most `max_blocks` blocks
/// (a sum of Stirling numbers of the second kind), saturating at `u128::MAX`.
pub fn count_partitions(n: usize, max_blocks: usize) -> u128 {
    if n == 0 {
        return 1;
    }
    let kmax = max_blocks.min(n);
    // stirling[k] = S(i, k) for the current row i
    let mut stirling = vec![0u128; kmax + 1];
    stirling[0] = 1;
    for _ in 0..n {
        for k in (1..=kmax).rev() {
            stirling[k] = (k as u128).saturating_mul(stirling[k]).saturating_add(stirling[k - 1]);
        }
        stirling[0] = 0;
    }
    stirling.iter().fold(0u128, |acc, &s| acc.saturating_add(s))
}

/// Restricted growth strings of length `n` with at most `max_blocks` distinct
/// values, in lexicographic order. Each one is a canonical set partition.
#[derive(Debug, Clone)]
pub struct RestrictedGrowth {
    labels: Vec<u32>,
    max_blocks: u32,
    started: bool,
    done: bool,
}

impl RestrictedGrowth {
    pub fn new(n: usize, max_blocks: usize) -> Self {
        Self { labels: vec![0; n], max_blocks: max_blocks as u32, started: false, done: max_blocks == 0 && n > 0 }
    }

    fn advance(&mut self) -> bool {
        let n = self.labels.len();
        for i in (1..n).rev() {
            let prefix_max = self.labels[..i].iter().copied().max().unwrap_or(0);
            let next = self.labels[i] + 1;
            if next <= prefix_max + 1 && next < self.max_blocks {
                self.labels[i] = next;
                self.labels[i + 1..].iter_mut().for_each(|l| *l = 0);
                return true;
            }
        }
        false
    }
}

impl Iterator for RestrictedGrowth {
    type Item = Vec<u32>;

    fn next(&mut self) -> Option<Vec<u32>> {
        if self.done {
            return None;
        }
        if self.started && !self.advance() {
            self.done = true;
            return None;
        }
        self.started = true;
        Some(self.labels.clone())
    }
}

/// Winner of an exhaustive search, with the runner-up for margin checks.
#[derive(Debug, Clone, PartialEq)]
pub struct ExhaustiveResult {
    pub best: ScoredPartition,
    pub runner_up: Option<ScoredPartition>,
    pub evaluated: u64,
}

/// Scores every set partition of the node universe into at most `max_groups`
/// groups and returns the best under [`ScoredPartition::rank`].
pub fn exhaustive_search(node_counts: &LayeredCounts, max_groups: usize, mode: ScoringMode, rule: &SuccessorRule) -> Result<ExhaustiveResult> {
    let n = node_counts.alphabet();
    let count = count_partitions(n, max_groups);
    if count > EXHAUSTIVE_LIMIT {
        return Err(Error::TooManyPartitions { count, limit: EXHAUSTIVE_LIMIT });
    }
    if max_groups == 0 {
        return Err(invalid("max_groups must be at least 1"));
    }
    let scorer = Scorer::new(node_counts, rule, mode)?;
    let mut best: Option<ScoredPartition> = None;
    let mut runner_up: Option<ScoredPartition> = None;
    let mut evaluated = 0u64;
    for labels in RestrictedGrowth::new(n, max_groups) {
        let partition = Partition::new(labels, max_groups as u32)?;
        let scored = scorer.score(&partition)?;
        evaluated += 1;
        match &best {
            Some(b) if !scored.better_than(b) => {
                if runner_up.as_ref().is_none_or(|r| scored.better_than(r)) {
                    runner_up = Some(scored);
                }
            }
            _ => runner_up = best.replace(scored),
        }
    }
    Ok(ExhaustiveResult { best: best.expect("at least one partition"), runner_up, evaluated })
}

/// Settings of one Metropolis-Hastings chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MhConfig {
    /// Labels available to the chain, `n_G`.
    pub max_groups: u32,
    pub iterations: usize,
    pub seed: u64,
    pub mode: ScoringMode,
}

impl MhConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_groups == 0 {
            return Err(invalid("max_groups must be at least 1"));
        }
        if self.iterations == 0 {
            return Err(invalid("iterations must be at least 1"));
        }
        Ok(())
    }
}

/// Per-iteration record of a chain.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SearchTrace {
    pub accepted: Vec<bool>,
    /// Log evidence of the chain state after each iteration.
    pub current: Vec<f64>,
    /// Best log evidence seen up to and including each iteration.
    pub best: Vec<f64>,
    /// AMI of the best partition against a reference, when one was given.
    pub best_ami: Option<Vec<f64>>,
}

impl SearchTrace {
    pub fn len(&self) -> usize {
        self.accepted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accepted.is_empty()
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.accepted.is_empty() {
            return 0.0;
        }
        self.accepted.iter().filter(|&&a| a).count() as f64 / self.accepted.len() as f64
    }
}

/// A Metropolis-Hastings chain over partitions.
///
/// Proposals relabel one uniformly chosen node with one of the other
/// `n_G - 1` labels, chosen uniformly, so the proposal is symmetric. Group
/// counts are updated in place from the node counts; the corpus is never
/// revisited.
pub struct Chain<'a, R> {
    scorer: Scorer<'a>,
    incidence: &'a Incidence,
    grouped: GroupCounts,
    current: ScoredPartition,
    best: ScoredPartition,
    best_updates: u64,
    rng: R,
}

impl<'a, R: Rng> Chain<'a, R> {
    pub fn new(scorer: Scorer<'a>, incidence: &'a Incidence, init: Partition, rng: R) -> Result<Self> {
        let grouped = GroupCounts::new(scorer.node_counts(), init)?;
        let current = scorer.score_grouped(&grouped)?;
        Ok(Self { scorer, incidence, grouped, best: current.clone(), current, best_updates: 0, rng })
    }

    pub fn current(&self) -> &ScoredPartition {
        &self.current
    }

    pub fn best(&self) -> &ScoredPartition {
        &self.best
    }

    /// Number of times the best partition has been replaced.
    pub fn best_updates(&self) -> u64 {
        self.best_updates
    }

    pub fn into_best(self) -> ScoredPartition {
        self.best
    }

    /// Draws a single-node relabel and applies the acceptance rule. Returns
    /// whether the move was accepted; with one label there is nothing to propose.
    pub fn step(&mut self) -> Result<bool> {
        let n_labels = self.grouped.partition().n_labels();
        let n_nodes = self.grouped.partition().len();
        if n_labels < 2 || n_nodes == 0 {
            return Ok(false);
        }
        let node = self.rng.gen_range(0..n_nodes) as u32;
        let old = self.grouped.partition().label(node);
        let mut label = self.rng.gen_range(0..n_labels - 1);
        if label >= old {
            label += 1;
        }
        self.try_move(node, label)
    }

    /// Proposes moving `node` to `label`: accepted outright if the evidence
    /// does not drop, otherwise with probability equal to the evidence ratio.
    pub fn try_move(&mut self, node: u32, label: u32) -> Result<bool> {
        let old = self.grouped.partition().try_label(node)?;
        if old == label {
            return Ok(false);
        }
        let node_counts = self.scorer.node_counts();
        self.grouped.move_node(node_counts, self.incidence, node, label)?;
        let candidate = self.scorer.score_grouped(&self.grouped)?;
        let delta = candidate.log_marginal - self.current.log_marginal;
        let accept = delta >= 0.0 || self.rng.gen::<f64>() < libm::exp(delta);
        if accept {
            if candidate.better_than(&self.best) {
                self.best = candidate.clone();
                self.best_updates += 1;
            }
            self.current = candidate;
        } else {
            self.grouped.move_node(node_counts, self.incidence, node, old)?;
        }
        Ok(accept)
    }

    /// Forces the chain state to `partition` without an acceptance test.
    pub fn reset(&mut self, partition: Partition) -> Result<()> {
        self.grouped = GroupCounts::new(self.scorer.node_counts(), partition)?;
        self.current = self.scorer.score_grouped(&self.grouped)?;
        Ok(())
    }
}

fn random_partition<R: Rng>(n: usize, max_groups: u32, rng: &mut R) -> Partition {
    let labels = (0..n).map(|_| rng.gen_range(0..max_groups)).collect();
    Partition::new(labels, max_groups).expect("labels drawn below bound")
}

/// Runs chain number `run` of a restart family. Each run draws from its own
/// stream of `config.seed`; `init = None` starts from uniformly random labels.
pub fn mh_run(
    node_counts: &LayeredCounts,
    config: &MhConfig,
    rule: &SuccessorRule,
    run: u64,
    init: Option<&Partition>,
    reference: Option<&Partition>,
) -> Result<(ScoredPartition, SearchTrace)> {
    config.validate()?;
    let scorer = Scorer::new(node_counts, rule, config.mode)?;
    let incidence = Incidence::new(node_counts);
    let mut rng = substream(config.seed, chain_stream(run));
    let n = node_counts.alphabet();
    let init = match init {
        Some(p) => {
            if p.len() != n {
                return Err(Error::SizeMismatch { left: p.len(), right: n });
            }
            p.with_label_bound(config.max_groups)?
        }
        None => random_partition(n, config.max_groups, &mut rng),
    };
    if let Some(r) = reference {
        if r.len() != n {
            return Err(Error::SizeMismatch { left: r.len(), right: n });
        }
    }
    let mut chain = Chain::new(scorer, &incidence, init, rng)?;
    let mut trace = SearchTrace {
        best_ami: reference.map(|_| Vec::with_capacity(config.iterations)),
        ..SearchTrace::default()
    };
    let mut ami_of_best = match reference {
        Some(r) => ami(&chain.best().partition, r)?,
        None => f64::NAN,
    };
    for _ in 0..config.iterations {
        let updates = chain.best_updates();
        let accepted = chain.step()?;
        trace.accepted.push(accepted);
        trace.current.push(chain.current().log_marginal);
        trace.best.push(chain.best().log_marginal);
        if let (Some(series), Some(r)) = (trace.best_ami.as_mut(), reference) {
            if chain.best_updates() != updates {
                ami_of_best = ami(&chain.best().partition, r)?;
            }
            series.push(ami_of_best);
        }
    }
    Ok((chain.into_best(), trace))
}

/// Single chain seeded by `config.seed`.
pub fn mh_search(
    node_counts: &LayeredCounts,
    config: &MhConfig,
    rule: &SuccessorRule,
    init: Option<&Partition>,
    reference: Option<&Partition>,
) -> Result<(ScoredPartition, SearchTrace)> {
    mh_run(node_counts, config, rule, 0, init, reference)
}

/// Overall and per-run bests of independent restarts.
#[derive(Debug, Clone, PartialEq)]
pub struct RestartResult {
    pub best: ScoredPartition,
    pub runs: Vec<ScoredPartition>,
}

impl RestartResult {
    /// Reduces per-run bests to the overall best.
    pub fn from_runs(runs: Vec<ScoredPartition>) -> Option<Self> {
        let best = runs.iter().fold(None::<&ScoredPartition>, |acc, s| match acc {
            Some(b) if !s.better_than(b) => Some(b),
            _ => Some(s),
        })?;
        Some(Self { best: best.clone(), runs })
    }
}

/// Runs `runs` chains from random starts, one after another.
pub fn mh_restarts(node_counts: &LayeredCounts, config: &MhConfig, rule: &SuccessorRule, runs: usize) -> Result<RestartResult> {
    let bests = (0..runs as u64)
        .map(|r| mh_run(node_counts, config, rule, r, None, None).map(|(best, _)| best))
        .collect::<Result<Vec<_>>>()?;
    RestartResult::from_runs(bests).ok_or_else(|| invalid("runs must be at least 1"))
}

/// Group counts after moving `node` to `label`, updated from `current` by
/// touching only the entries that involve the node.
///
/// `partition` is the group map `current` was aggregated under.
pub fn incremental_rescore(
    current: &LayeredCounts,
    partition: &Partition,
    node: u32,
    label: u32,
    node_counts: &LayeredCounts,
    incidence: &Incidence,
) -> Result<LayeredCounts> {
    let mut grouped = GroupCounts::from_layered(current, partition.clone())?;
    grouped.move_node(node_counts, incidence, node, label)?;
    Ok(grouped.to_layered())
}
