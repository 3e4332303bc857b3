//! Group detection runs and their JSON reports.

use std::time::Instant;

use pathgroups_core::eval::AMI_NORMALIZER;
use pathgroups_core::search::count_partitions;
use pathgroups_core::{
    build_counts, exhaustive_search, mh_run, MhConfig, PathCorpus, RestartResult, ScoredPartition, ScoringMode, SearchTrace,
    SuccessorRule,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Largest partition space `SearchKind::Auto` still enumerates.
pub const AUTO_EXHAUSTIVE_LIMIT: u128 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Scoring {
    Ladder,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SearchKind {
    Auto,
    Exhaustive,
    Mh,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectConfig {
    pub seed: u64,
    pub k_max: usize,
    pub max_groups: u32,
    pub iterations: usize,
    pub runs: usize,
    pub scoring: Scoring,
    pub fixed_order: Option<usize>,
    pub bf_threshold: f64,
    pub search: SearchKind,
    pub keep_traces: bool,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            k_max: 2,
            max_groups: 4,
            iterations: 10_000,
            runs: 4,
            scoring: Scoring::Ladder,
            fixed_order: None,
            bf_threshold: pathgroups_core::DEFAULT_BF_THRESHOLD,
            search: SearchKind::Auto,
            keep_traces: false,
        }
    }
}

impl DetectConfig {
    /// `--fixed-order` implies fixed scoring; fixed scoring without an order uses `k_max`.
    pub fn mode(&self) -> Result<ScoringMode> {
        if self.bf_threshold.is_nan() || self.bf_threshold <= 0.0 {
            return Err(CliError::Usage("--bf-threshold must be positive".into()));
        }
        let order = match (self.scoring, self.fixed_order) {
            (Scoring::Ladder, None) => return Ok(ScoringMode::Ladder { max_order: self.k_max, bf_threshold: self.bf_threshold }),
            (_, Some(k)) => k,
            (Scoring::Fixed, None) => self.k_max,
        };
        if order > self.k_max {
            return Err(CliError::Usage(format!("--fixed-order {order} exceeds --k-max {}", self.k_max)));
        }
        Ok(ScoringMode::Fixed { order })
    }

    fn resolve_search(&self, nodes: usize) -> SearchKind {
        match self.search {
            SearchKind::Auto if count_partitions(nodes, self.max_groups as usize) <= AUTO_EXHAUSTIVE_LIMIT => SearchKind::Exhaustive,
            SearchKind::Auto => SearchKind::Mh,
            other => other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionRecord {
    /// Canonical labels, one per node in report node order.
    pub labels: Vec<u32>,
    pub groups: usize,
    pub order: usize,
    pub log_marginal: f64,
    pub emission_log_marginal: f64,
    pub dynamics_log_marginal: f64,
    pub log_marginals_by_order: Option<Vec<f64>>,
    pub log_bayes_factors: Option<Vec<f64>>,
}

impl From<&ScoredPartition> for PartitionRecord {
    fn from(s: &ScoredPartition) -> Self {
        Self {
            labels: s.partition.canonical().labels().to_vec(),
            groups: s.effective_groups(),
            order: s.order,
            log_marginal: s.log_marginal,
            emission_log_marginal: s.emission_log_marginal,
            dynamics_log_marginal: s.dynamics_log_marginal,
            log_marginals_by_order: s.log_marginals_by_order(),
            log_bayes_factors: s.selection.as_ref().map(|sel| sel.log_bayes_factors.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub run: usize,
    pub acceptance_rate: f64,
    pub accepted: Vec<bool>,
    pub current: Vec<f64>,
    pub best: Vec<f64>,
}

impl TraceRecord {
    fn new(run: usize, trace: &SearchTrace) -> Self {
        Self {
            run,
            acceptance_rate: trace.acceptance_rate(),
            accepted: trace.accepted.clone(),
            current: trace.current.clone(),
            best: trace.best.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: DetectConfig,
    pub search: SearchKind,
    pub ami_normalizer: String,
    pub nodes: Vec<String>,
    pub paths: usize,
    pub graph_edges: Option<usize>,
    pub best: PartitionRecord,
    pub runs: Vec<PartitionRecord>,
    pub partitions_evaluated: Option<u64>,
    pub traces: Option<Vec<TraceRecord>>,
    pub wall_clock_seconds: f64,
}

impl RunReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Best labels keyed by node name.
    pub fn best_labels(&self) -> impl Iterator<Item = (&str, u32)> + '_ {
        self.nodes.iter().map(String::as_str).zip(self.best.labels.iter().copied())
    }
}

/// Finds the best partition of `corpus` under `config`: exhaustive
/// enumeration, or independent chains run in parallel.
pub fn detect(corpus: &PathCorpus, config: &DetectConfig) -> Result<RunReport> {
    let started = Instant::now();
    let mode = config.mode()?;
    let names = Some(&corpus.nodes);
    let counts = build_counts(corpus, config.k_max).map_err(|e| CliError::model(e, names))?;
    let rule = corpus.constraint.clone().map_or(SuccessorRule::Free, SuccessorRule::Graph);
    let search = config.resolve_search(corpus.universe());
    let (best, runs, evaluated, traces) = match search {
        SearchKind::Exhaustive => {
            let found = exhaustive_search(&counts, config.max_groups as usize, mode, &rule).map_err(|e| CliError::model(e, names))?;
            (found.best.clone(), vec![found.best], Some(found.evaluated), None)
        }
        _ => {
            if config.runs == 0 {
                return Err(CliError::Usage("--runs must be at least 1".into()));
            }
            let mh = MhConfig { max_groups: config.max_groups, iterations: config.iterations, seed: config.seed, mode };
            let results = (0..config.runs as u64)
                .into_par_iter()
                .map(|r| mh_run(&counts, &mh, &rule, r, None, None))
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| CliError::model(e, names))?;
            let traces = config
                .keep_traces
                .then(|| results.iter().enumerate().map(|(r, (_, t))| TraceRecord::new(r, t)).collect());
            let merged = RestartResult::from_runs(results.into_iter().map(|(b, _)| b).collect()).expect("at least one run");
            (merged.best, merged.runs, None, traces)
        }
    };
    Ok(RunReport {
        config: config.clone(),
        search,
        ami_normalizer: AMI_NORMALIZER.to_owned(),
        nodes: corpus.nodes.names().to_vec(),
        paths: corpus.paths.len(),
        graph_edges: corpus.constraint.as_ref().map(|g| g.len()),
        best: PartitionRecord::from(&best),
        runs: runs.iter().map(PartitionRecord::from).collect(),
        partitions_evaluated: evaluated,
        traces,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    })
}

/// Reruns the configuration echoed in `report` on `corpus`.
pub fn replay(report: &RunReport, corpus: &PathCorpus) -> Result<RunReport> {
    if corpus.nodes.names() != report.nodes.as_slice() {
        return Err(CliError::Input("corpus nodes differ from the nodes recorded in the report".into()));
    }
    detect(corpus, &report.config)
}
