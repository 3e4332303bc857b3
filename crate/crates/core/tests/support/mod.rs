//! Brute-force oracles and random tiny inputs shared by integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use pathgroups_core::{GraphConstraint, NodeTable, Partition, PathCorpus};
use rand::Rng;

pub type CountMap = BTreeMap<Vec<u32>, BTreeMap<u32, u64>>;

#[derive(Debug, Clone)]
pub struct Case {
    pub corpus: PathCorpus,
    pub partition: Partition,
    pub order: usize,
}

impl Case {
    pub fn graph(&self) -> Option<&GraphConstraint> {
        self.corpus.constraint.as_ref()
    }
}

/// Up to 5 nodes, 4 paths of at most 5 transitions, a random partition with
/// possibly empty labels, order at most 2, and a graph constraint half the time.
pub fn random_case<R: Rng>(rng: &mut R) -> Case {
    let n = rng.gen_range(1..=5usize);
    let mut corpus = PathCorpus::new(NodeTable::numbered("n", n));
    for _ in 0..rng.gen_range(1..=4) {
        let len = rng.gen_range(0..=5);
        corpus.paths.push((0..=len).map(|_| rng.gen_range(0..n as u32)).collect());
    }
    if rng.gen_bool(0.5) {
        let mut graph: GraphConstraint = corpus.paths.iter().flat_map(|p| p.windows(2).map(|w| (w[0], w[1]))).collect();
        for _ in 0..rng.gen_range(0..4) {
            graph.insert(rng.gen_range(0..n as u32), rng.gen_range(0..n as u32));
        }
        corpus = corpus.with_constraint(graph);
    }
    Case { corpus, partition: random_partition(n, rng), order: rng.gen_range(0..=2) }
}

pub fn random_partition<R: Rng>(n: usize, rng: &mut R) -> Partition {
    let n_labels = rng.gen_range(1..=n.max(1) as u32);
    Partition::new((0..n).map(|_| rng.gen_range(0..n_labels)).collect(), n_labels).unwrap()
}

/// Sequential predictive product: each node emission in corpus order with
/// probability `(n_v + 1) / (N_g + |g|)`, counts updated after every draw.
pub fn urn_emission(corpus: &PathCorpus, partition: &Partition) -> f64 {
    let sizes = partition.group_sizes();
    let mut node_seen: HashMap<u32, u64> = HashMap::new();
    let mut group_seen: HashMap<u32, u64> = HashMap::new();
    let mut log_p = 0.0;
    for &v in corpus.paths.iter().flatten() {
        let g = partition.label(v);
        let nv = node_seen.entry(v).or_default();
        let ng = group_seen.entry(g).or_default();
        log_p += ((*nv as f64 + 1.0) / (*ng as f64 + sizes[g as usize] as f64)).ln();
        *nv += 1;
        *ng += 1;
    }
    log_p
}

/// Groups that may follow `history`: every non-empty group for the empty
/// history or without a graph, otherwise the labels of graph targets of the
/// last group's members.
pub fn allowed(partition: &Partition, graph: Option<&GraphConstraint>, history: &[u32]) -> BTreeSet<u32> {
    match (graph, history.last()) {
        (Some(graph), Some(&last)) => graph
            .edges()
            .filter(|&(v, _)| partition.label(v) == last)
            .map(|(_, w)| partition.label(w))
            .collect(),
        _ => partition.labels().iter().copied().collect(),
    }
}

/// Sequential predictive product of group paths under a multi-order model:
/// position `i` conditions on the full prefix if `i < order`, else on the
/// last `order` groups; each step has probability `(n + 1) / (N + |S|)`.
pub fn urn_mon(corpus: &PathCorpus, partition: &Partition, order: usize, graph: Option<&GraphConstraint>) -> f64 {
    let mut seen: HashMap<(usize, Vec<u32>), HashMap<u32, u64>> = HashMap::new();
    let mut log_p = 0.0;
    for path in &corpus.paths {
        let groups: Vec<u32> = path.iter().map(|&v| partition.label(v)).collect();
        for (i, &g) in groups.iter().enumerate() {
            let history = if i < order { groups[..i].to_vec() } else { groups[i - order..i].to_vec() };
            let set = allowed(partition, graph, &history);
            assert!(set.contains(&g), "oracle saw a forbidden step");
            let row = seen.entry((i.min(order), history)).or_default();
            let total: u64 = row.values().sum();
            let n = row.entry(g).or_default();
            log_p += ((*n as f64 + 1.0) / (total as f64 + set.len() as f64)).ln();
            *n += 1;
        }
    }
    log_p
}

/// Naive count tables: exact layers `0..order` keyed by full prefix, a tail
/// keyed by the last `order` symbols, and per-symbol occurrences.
pub fn naive_counts(paths: &[Vec<u32>], alphabet: usize, order: usize) -> (Vec<CountMap>, CountMap, Vec<u64>) {
    let mut exact = vec![CountMap::new(); order];
    let mut tail = CountMap::new();
    let mut occurrence = vec![0u64; alphabet];
    for path in paths {
        for (i, &v) in path.iter().enumerate() {
            occurrence[v as usize] += 1;
            let (table, history) = if i < order { (&mut exact[i], &path[..i]) } else { (&mut tail, &path[i - order..i]) };
            *table.entry(history.to_vec()).or_default().entry(v).or_default() += 1;
        }
    }
    (exact, tail, occurrence)
}

/// Every node sequence with `len + 1` positions over `n` symbols.
pub fn all_sequences(n: u32, len: usize) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..=len {
        out = out.into_iter().flat_map(|p: Vec<u32>| (0..n).map(move |v| [p.clone(), vec![v]].concat())).collect();
    }
    out
}

/// Mean MI of `u` against uniformly random relabelings of `v`, with its standard error.
pub fn permutation_mi<R: Rng>(u: &Partition, v: &Partition, draws: usize, rng: &mut R) -> (f64, f64) {
    use pathgroups_core::eval::ContingencyTable;
    use rand::seq::SliceRandom;
    let mut labels = v.labels().to_vec();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..draws {
        labels.shuffle(rng);
        let shuffled = Partition::new(labels.clone(), v.n_labels()).unwrap();
        let mi = ContingencyTable::new(u, &shuffled).unwrap().mutual_information();
        sum += mi;
        sum_sq += mi * mi;
    }
    let mean = sum / draws as f64;
    let var = (sum_sq / draws as f64 - mean * mean).max(0.0);
    (mean, (var / draws as f64).sqrt())
}
