//! Detection of node groups with shared higher-order dynamics in pathway data.
//!
//! A corpus of paths is explained by two independent Dirichlet-multinomial
//! models that share one group map: an emission model choosing a node inside
//! its group, and a multi-order Markov model over the group sequence. Both
//! evidences are analytic, so a candidate partition is scored exactly from
//! transition counts collected in a single pass over the data, and the Markov
//! order is chosen per partition with a Bayes-factor ladder.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, contact-log
//! ingestion and the command line live in the `pathgroups` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod corpus;
pub mod counts;
pub mod dynamics;
pub mod emission;
mod error;
pub mod eval;
pub mod hog;
pub mod rng;
pub mod search;
pub mod special;
pub mod synth;

pub use corpus::{GraphConstraint, NodeTable, Partition, PathCorpus};
pub use counts::{aggregate_counts, build_counts, project_to_order, GroupCounts, Layer, LayeredCounts};
pub use dynamics::{mon_log_marginal, mon_posterior, select_order, MonPosterior, OrderSelection, SuccessorRule, SuccessorSet};
pub use emission::{emission_log_marginal, emission_posterior, EmissionPosterior};
pub use error::{Error, Result};
pub use eval::{ami, ContingencyTable};
pub use hog::{hog_path_log_likelihood, score_partition, HogModel, PathProbabilities, ScoredPartition, Scorer, ScoringMode};
pub use search::{exhaustive_search, incremental_rescore, mh_restarts, mh_run, mh_search, MhConfig, RestartResult, SearchTrace};

/// Bayes-factor threshold for accepting a higher Markov order ("very strong" evidence).
pub const DEFAULT_BF_THRESHOLD: f64 = 150.0;
