//! Contact logs to ego paths.

use std::collections::{BTreeMap, BTreeSet};

use pathgroups_core::{NodeTable, PathCorpus};

use crate::error::{CliError, Result};

/// Undirected proximity event between `i` and `j` at `timestamp` seconds.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ContactEvent {
    pub timestamp: i64,
    pub i: String,
    pub j: String,
}

impl ContactEvent {
    pub fn new(timestamp: i64, i: &str, j: &str) -> Self {
        Self { timestamp, i: i.to_owned(), j: j.to_owned() }
    }
}

/// One path per ego node: its partners in time order, where a contact with
/// the same partner at the same or the next timestamp (`gap == resolution`)
/// continues the previous interaction instead of starting a new one.
///
/// Events at one timestamp are ordered by partner name. Nodes are numbered
/// in name order and paths are emitted in ego name order.
pub fn extract_paths_from_contacts(events: &[ContactEvent], resolution: i64) -> Result<PathCorpus> {
    if resolution <= 0 {
        return Err(CliError::Usage(format!("resolution must be positive, got {resolution}")));
    }
    let names: BTreeSet<&str> = events.iter().flat_map(|e| [e.i.as_str(), e.j.as_str()]).collect();
    let mut nodes = NodeTable::new();
    for name in &names {
        nodes.intern(name);
    }
    let mut timelines: BTreeMap<u32, Vec<(i64, u32)>> = BTreeMap::new();
    for (k, e) in events.iter().enumerate() {
        if e.i == e.j {
            return Err(CliError::Input(format!("event {} is a contact of {:?} with itself", k + 1, e.i)));
        }
        let (i, j) = (nodes.get(&e.i).expect("interned"), nodes.get(&e.j).expect("interned"));
        timelines.entry(i).or_default().push((e.timestamp, j));
        timelines.entry(j).or_default().push((e.timestamp, i));
    }
    let mut corpus = PathCorpus::new(nodes);
    for (_, mut timeline) in timelines {
        timeline.sort_unstable();
        let mut last_seen: BTreeMap<u32, i64> = BTreeMap::new();
        let mut path = Vec::new();
        for (t, partner) in timeline {
            let continues = last_seen.get(&partner).is_some_and(|&prev| t - prev == 0 || t - prev == resolution);
            if !continues {
                path.push(partner);
            }
            last_seen.insert(partner, t);
        }
        if !path.is_empty() {
            corpus.paths.push(path);
        }
    }
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn named(corpus: &PathCorpus) -> Vec<Vec<&str>> {
        corpus.paths.iter().map(|p| p.iter().map(|&v| corpus.nodes.name(v)).collect()).collect()
    }

    #[test]
    fn long_contact_is_one_interaction() {
        let events = [ContactEvent::new(0, "a", "b"), ContactEvent::new(20, "a", "b"), ContactEvent::new(40, "a", "c")];
        let corpus = extract_paths_from_contacts(&events, 20).unwrap();
        assert_eq!(named(&corpus), vec![vec!["b", "c"], vec!["a"], vec!["a"]]);
    }

    #[test]
    fn interleaved_partners_keep_their_own_runs() {
        let events = [
            ContactEvent::new(20, "a", "c"),
            ContactEvent::new(0, "b", "a"),
            ContactEvent::new(0, "a", "c"),
            ContactEvent::new(20, "a", "b"),
            ContactEvent::new(100, "a", "b"),
        ];
        let corpus = extract_paths_from_contacts(&events, 20).unwrap();
        assert_eq!(named(&corpus)[0], vec!["b", "c", "b"]);
    }

    #[test]
    fn bad_resolution() {
        assert_eq!(extract_paths_from_contacts(&[], 0).unwrap_err().exit_code(), 2);
        assert!(extract_paths_from_contacts(&[], 20).unwrap().paths.is_empty());
    }
}
