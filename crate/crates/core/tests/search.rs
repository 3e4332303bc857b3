mod support;

use pathgroups_core::counts::Incidence;
use pathgroups_core::hog::Scorer;
use pathgroups_core::rng::substream;
use pathgroups_core::search::{count_partitions, Chain, EXHAUSTIVE_LIMIT};
use pathgroups_core::synth::*;
use pathgroups_core::*;
use rand::seq::SliceRandom;
use rand::Rng;
use support::*;

fn synthetic(dynamics: GroupDynamics, per_group: usize, paths: usize, seed: u64) -> (GroundTruth, PathCorpus) {
    let mut rng = substream(seed, 0);
    let truth = GroundTruth::equal_groups(dynamics, per_group, EmissionKind::Uniform, &mut rng).unwrap();
    let corpus = sample_paths(&truth, paths, 10, &mut rng);
    (truth, corpus)
}

fn all_labelings(n: usize, labels: u32) -> Vec<Vec<u32>> {
    (0..labels.pow(n as u32))
        .map(|mut code| {
            (0..n)
                .map(|_| {
                    let l = code % labels;
                    code /= labels;
                    l
                })
                .collect()
        })
        .collect()
}

#[test]
fn score_ignores_label_names() {
    let mut rng = substream(31, 0);
    for _ in 0..200 {
        let case = random_case(&mut rng);
        let counts = build_counts(&case.corpus, 2).unwrap();
        let rule = case.graph().map_or(SuccessorRule::Free, |g| SuccessorRule::Graph(g.clone()));
        let mode = ScoringMode::ladder(2);
        let base = score_partition(&counts, &case.partition, mode, &rule).unwrap();
        let mut perm: Vec<u32> = (0..case.partition.n_labels()).collect();
        perm.shuffle(&mut rng);
        let renamed = Partition::new(case.partition.labels().iter().map(|&l| perm[l as usize]).collect(), case.partition.n_labels()).unwrap();
        let other = score_partition(&counts, &renamed, mode, &rule).unwrap();
        assert!((base.log_marginal - other.log_marginal).abs() < 1e-9);
        assert_eq!(base.order, other.order);
    }
}

#[test]
fn exhaustive_matches_every_labeling() {
    let mut rng = substream(32, 0);
    for _ in 0..60 {
        let n = rng.gen_range(1..=6usize);
        let mut corpus = PathCorpus::new(NodeTable::numbered("n", n));
        for _ in 0..rng.gen_range(1..=6) {
            let len = rng.gen_range(0..=6);
            corpus.paths.push((0..=len).map(|_| rng.gen_range(0..n as u32)).collect());
        }
        let counts = build_counts(&corpus, 2).unwrap();
        let mode = ScoringMode::ladder(2);
        let found = exhaustive_search(&counts, 3, mode, &SuccessorRule::Free).unwrap();
        assert_eq!(found.evaluated as u128, count_partitions(n, 3));
        let brute = all_labelings(n, 3)
            .into_iter()
            .map(|l| score_partition(&counts, &Partition::new(l, 3).unwrap(), mode, &SuccessorRule::Free).unwrap().log_marginal)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((found.best.log_marginal - brute).abs() < 1e-9);

        let config = MhConfig { max_groups: 3, iterations: 3000, seed: 5, mode };
        let mh = mh_restarts(&counts, &config, &SuccessorRule::Free, 3).unwrap();
        assert!(mh.best.log_marginal <= brute + 1e-9);
        assert!((mh.best.log_marginal - brute).abs() < 1e-9, "chains missed the optimum on {corpus:?}");
    }
}

#[test]
fn exhaustive_refuses_large_spaces() {
    let corpus = PathCorpus::new(NodeTable::numbered("n", 16));
    let counts = build_counts(&corpus, 0).unwrap();
    let err = exhaustive_search(&counts, 16, ScoringMode::ladder(0), &SuccessorRule::Free).unwrap_err();
    assert_eq!(err, Error::TooManyPartitions { count: count_partitions(16, 16), limit: EXHAUSTIVE_LIMIT });
}

#[test]
fn communities_are_the_exhaustive_argmax() {
    let (truth, corpus) = synthetic(make_community_dynamics(3, 0.7).unwrap(), 3, 500, 1);
    let counts = build_counts(&corpus, 2).unwrap();
    let found = exhaustive_search(&counts, 4, ScoringMode::ladder(2), &SuccessorRule::Free).unwrap();
    assert_eq!(found.evaluated, 11_051);
    assert!(found.best.partition.same_grouping(&truth.partition));
    assert_eq!(found.best.order, 1);
    assert!(found.runner_up.unwrap().log_marginal < found.best.log_marginal);
}

#[test]
fn chain_recovers_roles() {
    let (truth, corpus) = synthetic(make_role_dynamics(3, 0.1).unwrap(), 3, 500, 2);
    let counts = build_counts(&corpus, 2).unwrap();
    let mode = ScoringMode::ladder(2);
    let exact = exhaustive_search(&counts, 4, mode, &SuccessorRule::Free).unwrap();
    let config = MhConfig { max_groups: 4, iterations: 4000, seed: 9, mode };
    let mh = mh_restarts(&counts, &config, &SuccessorRule::Free, 4).unwrap();
    assert!(mh.best.partition.same_grouping(&exact.best.partition));
    assert_eq!(ami(&mh.best.partition, &truth.partition).unwrap(), 1.0);
    assert_eq!(mh.best.order, 1);
}

#[test]
fn traces_never_lose_the_best() {
    let (_, corpus) = synthetic(make_community_dynamics(3, 0.7).unwrap(), 3, 200, 3);
    let counts = build_counts(&corpus, 2).unwrap();
    for seed in 0..5 {
        let config = MhConfig { max_groups: 4, iterations: 1500, seed, mode: ScoringMode::ladder(2) };
        let (best, trace) = mh_search(&counts, &config, &SuccessorRule::Free, None, None).unwrap();
        assert_eq!(trace.len(), 1500);
        assert!(trace.best.windows(2).all(|w| w[1] >= w[0]));
        assert!(trace.best.iter().zip(&trace.current).all(|(b, c)| b >= c));
        assert_eq!(*trace.best.last().unwrap(), best.log_marginal);
        let (again, retrace) = mh_search(&counts, &config, &SuccessorRule::Free, None, None).unwrap();
        assert_eq!((best, trace), (again, retrace));
    }
}

/// A partition and a single move off it that lowers the evidence by a
/// moderate amount, so both outcomes are frequent.
fn downhill_move(scorer: &Scorer, from: &Partition) -> Option<(u32, u32, f64)> {
    let base = scorer.score(from).unwrap().log_marginal;
    for node in 0..from.len() as u32 {
        for label in 0..from.n_labels() {
            if label == from.label(node) {
                continue;
            }
            let mut to = from.clone();
            to.set_label(node, label).unwrap();
            let delta = scorer.score(&to).unwrap().log_marginal - base;
            if (-2.0..-0.3).contains(&delta) {
                return Some((node, label, delta));
            }
        }
    }
    None
}

#[test]
fn acceptance_frequency_matches_evidence_ratio() {
    let corpus = PathCorpus::from_tokens([
        vec!["a", "b", "a", "c"],
        vec!["b", "a", "d"],
        vec!["c", "d", "c"],
        vec!["d", "a"],
    ]);
    let counts = build_counts(&corpus, 1).unwrap();
    let rule = SuccessorRule::Free;
    let scorer = Scorer::new(&counts, &rule, ScoringMode::Fixed { order: 1 }).unwrap();
    let mut rng = substream(33, 0);
    let (from, node, label, delta) = loop {
        let p = random_partition(4, &mut rng).with_label_bound(3).unwrap();
        if let Some((node, label, delta)) = downhill_move(&scorer, &p) {
            break (p, node, label, delta);
        }
    };
    let incidence = Incidence::new(&counts);
    let mut chain = Chain::new(scorer, &incidence, from.clone(), substream(34, 1)).unwrap();
    let trials = 10_000;
    let mut accepted = 0;
    for _ in 0..trials {
        if chain.try_move(node, label).unwrap() {
            accepted += 1;
            chain.reset(from.clone()).unwrap();
        }
        assert_eq!(chain.current().partition, from);
    }
    let p = delta.exp();
    let sigma = (p * (1.0 - p) / trials as f64).sqrt();
    let freq = accepted as f64 / trials as f64;
    assert!((freq - p).abs() < 3.0 * sigma, "frequency {freq}, ratio {p}");

    // the reverse move raises the evidence and is always taken
    let mut to = from.clone();
    to.set_label(node, label).unwrap();
    let mut uphill = Chain::new(scorer, &incidence, to.clone(), substream(34, 2)).unwrap();
    for _ in 0..100 {
        assert!(uphill.try_move(node, from.label(node)).unwrap());
        uphill.reset(to.clone()).unwrap();
    }
}

#[test]
fn local_maximum_survives_one_rejected_step() {
    let (truth, corpus) = synthetic(make_community_dynamics(3, 0.7).unwrap(), 3, 500, 4);
    let counts = build_counts(&corpus, 2).unwrap();
    let config = MhConfig { max_groups: 3, iterations: 1, seed: 0, mode: ScoringMode::ladder(2) };
    let (best, trace) = mh_search(&counts, &config, &SuccessorRule::Free, Some(&truth.partition), None).unwrap();
    assert_eq!(trace.accepted, vec![false]);
    assert_eq!(best.partition, truth.partition);
}
