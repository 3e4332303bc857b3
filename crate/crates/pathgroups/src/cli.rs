use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use pathgroups_core::eval::order_scan_fixed_labels;
use pathgroups_core::rng::{substream, GENERATION_STREAM};
use pathgroups_core::synth::{make_community_dynamics, make_random_mon, make_role_dynamics, sample_paths, EmissionKind, GroundTruth};
use pathgroups_core::{ami, build_counts, PathCorpus, SuccessorRule, DEFAULT_BF_THRESHOLD};
use serde::Serialize;

use crate::contacts::extract_paths_from_contacts;
use crate::error::{CliError, Result};
use crate::experiments::{self, Experiment, ReplicateConfig, Setting};
use crate::formats::{self, LabelFile};
use crate::run::{detect, DetectConfig, Scoring, SearchKind};

#[derive(Debug, Parser)]
#[command(name = "pathgroups", version, about = "Bayesian detection of groups and their higher-order dynamics in path data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a paths file or a contact log into a canonical paths file.
    Ingest(IngestArgs),
    /// Sample a corpus and its ground-truth labels from a generating model.
    Synth(SynthArgs),
    /// Find the best partition of a corpus and write a JSON report.
    Detect(DetectArgs),
    /// Log evidence of fixed labels at every order.
    ScanOrder(ScanArgs),
    /// Adjusted mutual information between two label files.
    Ami { first: PathBuf, second: PathBuf },
    /// Run a named experiment and write its table as CSV.
    Replicate(ReplicateArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Paths file to normalize.
    #[arg(long, conflicts_with = "contacts", required_unless_present = "contacts")]
    pub paths: Option<PathBuf>,
    /// Contact log (CSV t,i,j) to turn into one path per node.
    #[arg(long)]
    pub contacts: Option<PathBuf>,
    /// Contact resolution in seconds.
    #[arg(long, default_value_t = 20)]
    pub resolution: i64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Model {
    Communities,
    Roles,
    Mon,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Emission {
    Uniform,
    Dirichlet,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value = "communities")]
    pub model: Model,
    /// Order of random dynamics (`--model mon`).
    #[arg(long, default_value_t = 1)]
    pub order: usize,
    #[arg(long, default_value_t = 3)]
    pub groups: usize,
    #[arg(long, default_value_t = 3)]
    pub per_group: usize,
    #[arg(long, default_value_t = experiments::COMMUNITY_P_IN)]
    pub p_in: f64,
    #[arg(long, default_value_t = experiments::ROLE_P_STAY)]
    pub p_stay: f64,
    #[arg(long, default_value_t = 500)]
    pub paths: usize,
    /// Transitions per path.
    #[arg(long, default_value_t = experiments::PATH_LENGTH)]
    pub length: usize,
    #[arg(long, value_enum, default_value = "uniform")]
    pub emission: Emission,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory receiving corpus.paths and truth.csv.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long, default_value_t = 2)]
    pub k_max: usize,
    #[arg(long, default_value_t = 4)]
    pub max_groups: u32,
    #[arg(long, default_value_t = 10_000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 4)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "ladder")]
    pub scoring: Scoring,
    #[arg(long)]
    pub fixed_order: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_BF_THRESHOLD)]
    pub bf_threshold: f64,
    #[arg(long, value_enum, default_value = "auto")]
    pub search: SearchKind,
    /// Keep per-iteration chain traces in the report.
    #[arg(long)]
    pub traces: bool,
}

impl SearchArgs {
    pub fn config(&self) -> DetectConfig {
        DetectConfig {
            seed: self.seed,
            k_max: self.k_max,
            max_groups: self.max_groups,
            iterations: self.iterations,
            runs: self.runs,
            scoring: self.scoring,
            fixed_order: self.fixed_order,
            bf_threshold: self.bf_threshold,
            search: self.search,
            keep_traces: self.traces,
        }
    }
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    pub corpus: PathBuf,
    /// Node-level graph (CSV src,dst) constraining transitions.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[command(flatten)]
    pub search: SearchArgs,
    /// JSON report destination.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the best labels as CSV.
    #[arg(long)]
    pub labels_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    pub corpus: PathBuf,
    pub labels: PathBuf,
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    pub k_max: usize,
    #[arg(long, default_value_t = DEFAULT_BF_THRESHOLD)]
    pub bf_threshold: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReplicateArgs {
    #[arg(value_enum)]
    pub experiment: Experiment,
    #[arg(long, default_value_t = 10)]
    pub replicates: usize,
    /// Paths per corpus (default 500 for communities and roles, 10000 otherwise).
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 5)]
    pub runs: usize,
    #[arg(long, default_value_t = DEFAULT_BF_THRESHOLD)]
    pub bf_threshold: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Files to write and text to print once a command has finished.
#[derive(Debug, Default)]
pub struct Output {
    pub files: Vec<(PathBuf, String)>,
    pub stdout: String,
}

impl Output {
    /// Routes `text` to `path` if given, else to standard output.
    fn emit(&mut self, path: Option<&PathBuf>, text: String) {
        match path {
            Some(p) => self.files.push((p.clone(), text)),
            None => self.stdout.push_str(&text),
        }
    }

    pub fn write(self) -> Result<String> {
        for (path, text) in &self.files {
            formats::write_text(path, text)?;
        }
        Ok(self.stdout)
    }
}

fn load_corpus(path: &Path, graph: Option<&Path>) -> Result<PathCorpus> {
    let corpus = formats::read_paths(path)?;
    match graph {
        Some(g) => {
            let graph = formats::read_graph(g, &corpus.nodes)?;
            Ok(corpus.with_constraint(graph))
        }
        None => Ok(corpus),
    }
}

pub fn execute(cli: Cli) -> Result<Output> {
    let mut out = Output::default();
    match cli.command {
        Command::Ingest(args) => {
            let corpus = match (&args.paths, &args.contacts) {
                (Some(p), _) => formats::read_paths(p)?,
                (None, Some(c)) => extract_paths_from_contacts(&formats::read_contacts(c)?, args.resolution)?,
                (None, None) => return Err(CliError::Usage("give --paths or --contacts".into())),
            };
            corpus.validate().map_err(|e| CliError::model(e, Some(&corpus.nodes)))?;
            out.emit(args.out.as_ref(), formats::write_paths(&corpus)?);
            if args.out.is_some() {
                writeln!(out.stdout, "{} nodes, {} paths", corpus.universe(), corpus.paths.len()).ok();
            }
        }
        Command::Synth(args) => {
            let mut rng = substream(args.seed, GENERATION_STREAM);
            let dynamics = match args.model {
                Model::Communities => make_community_dynamics(args.groups, args.p_in)?,
                Model::Roles => make_role_dynamics(args.groups, args.p_stay)?,
                Model::Mon => make_random_mon(args.groups, args.order, &mut rng)?,
            };
            let kind = match args.emission {
                Emission::Uniform => EmissionKind::Uniform,
                Emission::Dirichlet => EmissionKind::Dirichlet,
            };
            let truth = GroundTruth::equal_groups(dynamics, args.per_group, kind, &mut rng)?;
            let corpus = sample_paths(&truth, args.paths, args.length, &mut rng);
            out.files.push((args.out.join("corpus.paths"), formats::write_paths(&corpus)?));
            out.files.push((args.out.join("truth.csv"), formats::write_labels(&corpus.nodes, &truth.partition)?));
            writeln!(out.stdout, "{} paths over {} nodes in {}", corpus.paths.len(), corpus.universe(), args.out.display()).ok();
        }
        Command::Detect(args) => {
            let corpus = load_corpus(&args.corpus, args.graph.as_deref())?;
            let report = detect(&corpus, &args.search.config())?;
            if let Some(path) = &args.labels_out {
                let partition = pathgroups_core::Partition::from_labels(report.best.labels.clone());
                out.files.push((path.clone(), formats::write_labels(&corpus.nodes, &partition)?));
            }
            match &args.out {
                Some(path) => {
                    writeln!(
                        out.stdout,
                        "best: {} groups, order {}, log evidence {:.6} ({} search, {:.2}s)",
                        report.best.groups,
                        report.best.order,
                        report.best.log_marginal,
                        serde_json::to_value(report.search)?.as_str().unwrap_or_default(),
                        report.wall_clock_seconds
                    )
                    .ok();
                    out.files.push((path.clone(), report.to_json()?));
                }
                None => {
                    out.stdout.push_str(&report.to_json()?);
                    out.stdout.push('\n');
                }
            }
        }
        Command::ScanOrder(args) => {
            let corpus = load_corpus(&args.corpus, args.graph.as_deref())?;
            let labels = LabelFile::read(&args.labels)?.to_partition(&corpus.nodes)?;
            let names = Some(&corpus.nodes);
            let counts = build_counts(&corpus, args.k_max).map_err(|e| CliError::model(e, names))?;
            let rule = corpus.constraint.clone().map_or(SuccessorRule::Free, SuccessorRule::Graph);
            let scan = order_scan_fixed_labels(&counts, &labels, args.k_max, &rule, args.bf_threshold).map_err(|e| CliError::model(e, names))?;
            let rows: Vec<ScanRow> = scan
                .scores
                .iter()
                .enumerate()
                .map(|(k, s)| ScanRow {
                    order: k,
                    log_marginal: s.log_marginal,
                    emission_log_marginal: s.emission_log_marginal,
                    dynamics_log_marginal: s.dynamics_log_marginal,
                    log_bayes_factor: k.checked_sub(1).map(|j| scan.selection.log_bayes_factors[j]),
                    selected: k == scan.selection.selected,
                })
                .collect();
            out.emit(args.out.as_ref(), experiments::to_csv(&rows)?);
        }
        Command::Ami { first, second } => {
            let (a, b) = (LabelFile::read(&first)?, LabelFile::read(&second)?);
            let (na, nb) = (a.nodes(), b.nodes());
            for (x, nx, y, ny) in [(&first, &na, &second, &nb), (&second, &nb, &first, &na)] {
                if let Some(stray) = nx.names().iter().find(|n| ny.get(n).is_none()) {
                    return Err(CliError::Input(format!(
                        "{} labels node {stray:?}, which {} does not; both files must cover the same nodes",
                        x.display(),
                        y.display()
                    )));
                }
            }
            let (pa, pb) = (a.to_partition(&na)?, b.to_partition(&na)?);
            writeln!(out.stdout, "{}", ami(&pa, &pb)?).ok();
        }
        Command::Replicate(args) => {
            let config = ReplicateConfig {
                replicates: args.replicates,
                paths: args.paths,
                seed: args.seed,
                iterations: args.iterations,
                runs: args.runs,
                bf_threshold: args.bf_threshold,
            };
            let table = match args.experiment {
                Experiment::FixedOrder => {
                    let rows = experiments::fixed_order(&config)?;
                    for order in [1, 2] {
                        let best = rows.iter().filter(|r| r.order == order).map(|r| r.log_marginal).fold(f64::NEG_INFINITY, f64::max);
                        writeln!(out.stdout, "fixed order {order}: best log evidence {best:.6}").ok();
                    }
                    experiments::to_csv(&rows)?
                }
                Experiment::FromLabels => {
                    let rows = experiments::from_labels(&config)?;
                    if let Some(last) = rows.last() {
                        writeln!(out.stdout, "after {} iterations: best log evidence {:.6}, AMI vs start {:.4}", last.iteration, last.best_log_marginal, last.ami_vs_start).ok();
                    }
                    experiments::to_csv(&rows)?
                }
                recovery => {
                    let rows = experiments::recovery(Setting::try_from(recovery)?, &config)?;
                    let s = experiments::summarize(&rows);
                    writeln!(out.stdout, "{}: {}/{} recovered, mean AMI {:.4}, selected orders {:?}", s.experiment, s.recovered, s.replicates, s.mean_ami, s.orders).ok();
                    experiments::to_csv(&rows)?
                }
            };
            out.emit(args.out.as_ref(), table);
        }
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
struct ScanRow {
    order: usize,
    log_marginal: f64,
    emission_log_marginal: f64,
    dynamics_log_marginal: f64,
    log_bayes_factor: Option<f64>,
    selected: bool,
}
