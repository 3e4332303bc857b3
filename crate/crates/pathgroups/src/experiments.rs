//! Synthetic recovery experiments and the fixed-order and from-labels protocols.
//!
//! Every replicate draws its data from [`replicate_seed`] of the run seed, so
//! replicates are independent of each other and of how many run in parallel.

use pathgroups_core::eval::optimize_from_labels;
use pathgroups_core::rng::{replicate_seed, substream, GENERATION_STREAM};
use pathgroups_core::synth::{
    make_community_dynamics, make_random_mon, make_role_dynamics, sample_paths, EmissionKind, GroundTruth,
};
use pathgroups_core::{
    ami, build_counts, exhaustive_search, mh_run, score_partition, LayeredCounts, MhConfig, Partition, PathCorpus, ScoringMode,
    SuccessorRule,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CliError, Result};

pub const GROUPS: usize = 3;
pub const NODES_PER_GROUP: usize = 3;
pub const PATH_LENGTH: usize = 10;
pub const SEARCH_GROUPS: usize = 4;
pub const COMMUNITY_P_IN: f64 = 0.7;
pub const ROLE_P_STAY: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Experiment {
    Communities,
    Roles,
    #[value(name = "synth-1")]
    Synth1,
    #[value(name = "synth-2")]
    Synth2,
    #[value(name = "synth-3")]
    Synth3,
    FixedOrder,
    FromLabels,
}

/// A generating model for recovery experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Setting {
    Communities,
    Roles,
    /// Random multi-order dynamics of this order.
    RandomMon(usize),
}

impl Setting {
    pub fn name(&self) -> String {
        match self {
            Setting::Communities => "communities".into(),
            Setting::Roles => "roles".into(),
            Setting::RandomMon(k) => format!("synth-{k}"),
        }
    }

    pub fn true_order(&self) -> usize {
        match self {
            Setting::RandomMon(k) => *k,
            _ => 1,
        }
    }

    /// Highest order the search considers: one above the generating order.
    pub fn k_max(&self) -> usize {
        self.true_order() + 1
    }

    pub fn default_paths(&self) -> usize {
        match self {
            Setting::RandomMon(_) => 10_000,
            _ => 500,
        }
    }

    /// Ground truth and sampled corpus of replicate `replicate`.
    pub fn generate(&self, seed: u64, replicate: u64, paths: usize) -> Result<(GroundTruth, PathCorpus)> {
        let mut rng = substream(replicate_seed(seed, replicate), GENERATION_STREAM);
        let (dynamics, emission) = match self {
            Setting::Communities => (make_community_dynamics(GROUPS, COMMUNITY_P_IN)?, EmissionKind::Uniform),
            Setting::Roles => (make_role_dynamics(GROUPS, ROLE_P_STAY)?, EmissionKind::Uniform),
            Setting::RandomMon(k) => (make_random_mon(GROUPS, *k, &mut rng)?, EmissionKind::Dirichlet),
        };
        let truth = GroundTruth::equal_groups(dynamics, NODES_PER_GROUP, emission, &mut rng)?;
        let corpus = sample_paths(&truth, paths, PATH_LENGTH, &mut rng);
        Ok((truth, corpus))
    }
}

impl TryFrom<Experiment> for Setting {
    type Error = CliError;

    fn try_from(e: Experiment) -> Result<Self> {
        Ok(match e {
            Experiment::Communities => Setting::Communities,
            Experiment::Roles => Setting::Roles,
            Experiment::Synth1 => Setting::RandomMon(1),
            Experiment::Synth2 => Setting::RandomMon(2),
            Experiment::Synth3 => Setting::RandomMon(3),
            other => return Err(CliError::Usage(format!("{other:?} is not a recovery experiment"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicateConfig {
    pub replicates: usize,
    /// Paths per corpus; `None` uses the setting's default.
    pub paths: Option<usize>,
    pub seed: u64,
    pub iterations: usize,
    pub runs: usize,
    pub bf_threshold: f64,
}

impl Default for ReplicateConfig {
    fn default() -> Self {
        Self { replicates: 10, paths: None, seed: 0, iterations: 1000, runs: 5, bf_threshold: pathgroups_core::DEFAULT_BF_THRESHOLD }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryRow {
    pub experiment: String,
    pub replicate: u64,
    pub paths: usize,
    pub true_order: usize,
    pub selected_order: usize,
    pub groups: usize,
    pub ami: f64,
    pub truth_is_argmax: bool,
    pub log_marginal: f64,
    pub truth_log_marginal: f64,
}

impl RecoveryRow {
    pub fn recovered(&self) -> bool {
        self.ami == 1.0 && self.selected_order == self.true_order
    }
}

/// Exhaustive search over up to four groups on one replicate.
pub fn recovery_replicate(setting: Setting, config: &ReplicateConfig, replicate: u64) -> Result<RecoveryRow> {
    let paths = config.paths.unwrap_or_else(|| setting.default_paths());
    let (truth, corpus) = setting.generate(config.seed, replicate, paths)?;
    let counts = build_counts(&corpus, setting.k_max())?;
    let mode = ScoringMode::Ladder { max_order: setting.k_max(), bf_threshold: config.bf_threshold };
    let found = exhaustive_search(&counts, SEARCH_GROUPS, mode, &SuccessorRule::Free)?;
    let truth_score = score_partition(&counts, &truth.partition, mode, &SuccessorRule::Free)?;
    Ok(RecoveryRow {
        experiment: setting.name(),
        replicate,
        paths,
        true_order: setting.true_order(),
        selected_order: found.best.order,
        groups: found.best.effective_groups(),
        ami: ami(&found.best.partition, &truth.partition)?,
        truth_is_argmax: found.best.partition.same_grouping(&truth.partition),
        log_marginal: found.best.log_marginal,
        truth_log_marginal: truth_score.log_marginal,
    })
}

/// All replicates of a setting, in parallel, ordered by replicate.
pub fn recovery(setting: Setting, config: &ReplicateConfig) -> Result<Vec<RecoveryRow>> {
    (0..config.replicates as u64).into_par_iter().map(|r| recovery_replicate(setting, config, r)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoverySummary {
    pub experiment: String,
    pub replicates: usize,
    pub recovered: usize,
    pub mean_ami: f64,
    pub orders: Vec<usize>,
}

pub fn summarize(rows: &[RecoveryRow]) -> RecoverySummary {
    RecoverySummary {
        experiment: rows.first().map(|r| r.experiment.clone()).unwrap_or_default(),
        replicates: rows.len(),
        recovered: rows.iter().filter(|r| r.recovered()).count(),
        mean_ami: rows.iter().map(|r| r.ami).sum::<f64>() / rows.len().max(1) as f64,
        orders: rows.iter().map(|r| r.selected_order).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedOrderRow {
    pub order: usize,
    pub run: u64,
    pub log_marginal: f64,
    pub groups: usize,
    pub ami: f64,
}

/// Chains scored at fixed orders 1 and 2 on a second-order corpus.
pub fn fixed_order(config: &ReplicateConfig) -> Result<Vec<FixedOrderRow>> {
    let setting = Setting::RandomMon(2);
    let (truth, corpus) = setting.generate(config.seed, 0, config.paths.unwrap_or(setting.default_paths()))?;
    let counts = build_counts(&corpus, 2)?;
    let jobs: Vec<(usize, u64)> = [1, 2].iter().flat_map(|&k| (0..config.runs as u64).map(move |r| (k, r))).collect();
    jobs.into_par_iter()
        .map(|(order, run)| {
            let mh = MhConfig { max_groups: SEARCH_GROUPS as u32, iterations: config.iterations, seed: config.seed, mode: ScoringMode::Fixed { order } };
            let (best, _) = mh_run(&counts, &mh, &SuccessorRule::Free, run, None, None)?;
            Ok(FixedOrderRow { order, run, log_marginal: best.log_marginal, groups: best.effective_groups(), ami: ami(&best.partition, &truth.partition)? })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub accepted: bool,
    pub current_log_marginal: f64,
    pub best_log_marginal: f64,
    pub ami_vs_start: f64,
}

/// Labels that split every community across all groups.
pub fn misaligned_labels() -> Partition {
    Partition::from_labels((0..GROUPS * NODES_PER_GROUP).map(|v| (v % GROUPS) as u32).collect())
}

/// Community corpus and its node counts, for starting a chain away from the optimum.
pub fn from_labels_data(config: &ReplicateConfig) -> Result<(GroundTruth, LayeredCounts)> {
    let setting = Setting::Communities;
    let (truth, corpus) = setting.generate(config.seed, 0, config.paths.unwrap_or(setting.default_paths()))?;
    Ok((truth, build_counts(&corpus, setting.k_max())?))
}

/// One chain started from [`misaligned_labels`], tracking AMI against them.
pub fn from_labels(config: &ReplicateConfig) -> Result<Vec<TraceRow>> {
    let (_, counts) = from_labels_data(config)?;
    let mh = MhConfig {
        max_groups: GROUPS as u32,
        iterations: config.iterations,
        seed: config.seed,
        mode: ScoringMode::Ladder { max_order: 2, bf_threshold: config.bf_threshold },
    };
    let (_, trace) = optimize_from_labels(&counts, &misaligned_labels(), &mh, &SuccessorRule::Free)?;
    let amis = trace.best_ami.clone().unwrap_or_default();
    Ok((0..trace.len())
        .map(|i| TraceRow {
            iteration: i + 1,
            accepted: trace.accepted[i],
            current_log_marginal: trace.current[i],
            best_log_marginal: trace.best[i],
            ami_vs_start: amis[i],
        })
        .collect())
}

pub fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row)?;
    }
    let bytes = writer.into_inner().map_err(|e| CliError::Input(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
