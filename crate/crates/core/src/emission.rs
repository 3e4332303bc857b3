//! Emission model: which member node a group emits, with a uniform Dirichlet prior per group.

use alloc::vec;
use alloc::vec::Vec;

use crate::corpus::Partition;
use crate::error::{Error, Result};
use crate::special::log_dirichlet_multinomial;

fn check(occurrence: &[u64], partition: &Partition) -> Result<()> {
    match occurrence.iter().enumerate().skip(partition.len()).find(|(_, &n)| n > 0) {
        Some((v, _)) => Err(Error::UnassignedNode { node: v as u32 }),
        None => Ok(()),
    }
}

/// Log evidence of node occurrences given the group map.
///
/// Each group contributes the Dirichlet-multinomial evidence of its members'
/// counts over all of its members, observed or not. Empty groups and
/// single-node groups contribute 0.
pub fn emission_log_marginal(occurrence: &[u64], partition: &Partition) -> Result<f64> {
    check(occurrence, partition)?;
    let n_labels = partition.n_labels() as usize;
    let mut per_group: Vec<Vec<u64>> = vec![Vec::new(); n_labels];
    for (v, &g) in partition.labels().iter().enumerate() {
        per_group[g as usize].push(occurrence.get(v).copied().unwrap_or(0));
    }
    Ok(per_group.iter().map(|counts| log_dirichlet_multinomial(counts.iter().copied(), counts.len())).sum())
}

/// Posterior Dirichlet concentrations `1 + n_v` of every group's emission vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionPosterior {
    partition: Partition,
    alpha: Vec<f64>,
    group_totals: Vec<f64>,
}

impl EmissionPosterior {
    /// Concentration of `node` within its own group.
    pub fn alpha(&self, node: u32) -> f64 {
        self.alpha[node as usize]
    }

    /// `(node, alpha)` pairs of one group, in node order.
    pub fn group(&self, label: u32) -> Vec<(u32, f64)> {
        self.partition
            .labels()
            .iter()
            .enumerate()
            .filter(|(_, &g)| g == label)
            .map(|(v, _)| (v as u32, self.alpha[v]))
            .collect()
    }

    /// Posterior-mean probability that the node's group emits this node.
    pub fn mean(&self, node: u32) -> f64 {
        let g = self.partition.label(node) as usize;
        self.alpha[node as usize] / self.group_totals[g]
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }
}

pub fn emission_posterior(occurrence: &[u64], partition: &Partition) -> Result<EmissionPosterior> {
    check(occurrence, partition)?;
    let alpha: Vec<f64> = (0..partition.len()).map(|v| 1.0 + occurrence.get(v).copied().unwrap_or(0) as f64).collect();
    let mut group_totals = vec![0.0; partition.n_labels() as usize];
    for (v, &g) in partition.labels().iter().enumerate() {
        group_totals[g as usize] += alpha[v];
    }
    Ok(EmissionPosterior { partition: partition.clone(), alpha, group_totals })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singletons_have_unit_evidence() {
        let occ = [5, 0, 12, 3];
        assert_eq!(emission_log_marginal(&occ, &Partition::singletons(4)).unwrap(), 0.0);
    }

    #[test]
    fn pair_group_matches_urn() {
        let v = emission_log_marginal(&[2, 1], &Partition::single_group(2)).unwrap();
        assert!((v - (-2.484_906_649_788_000_4)).abs() < 1e-12);
    }

    #[test]
    fn lone_node_group_is_certain() {
        let p = Partition::from_labels(vec![0, 1, 1]);
        let a = emission_log_marginal(&[40, 0, 0], &p).unwrap();
        assert_eq!(a, 0.0);
    }

    #[test]
    fn unobserved_members_still_share_mass() {
        // group {a, b} with n_a = 1, n_b = 0: probability 1/2
        let v = emission_log_marginal(&[1, 0], &Partition::single_group(2)).unwrap();
        assert!((v - libm::log(0.5)).abs() < 1e-14);
    }

    #[test]
    fn posterior_update() {
        let post = emission_posterior(&[0, 0, 0], &Partition::single_group(3)).unwrap();
        assert!((0..3).all(|v| post.alpha(v) == 1.0));
        let post = emission_posterior(&[2, 1], &Partition::single_group(2)).unwrap();
        assert_eq!(post.group(0), vec![(0, 3.0), (1, 2.0)]);
        assert!((post.mean(0) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn groups_update_independently() {
        let p = Partition::from_labels(vec![0, 1, 0, 1]);
        let post = emission_posterior(&[1, 2, 3, 4], &p).unwrap();
        assert_eq!(post.group(0), vec![(0, 2.0), (2, 4.0)]);
        assert_eq!(post.group(1), vec![(1, 3.0), (3, 5.0)]);
    }

    #[test]
    fn counted_node_outside_partition() {
        let err = emission_log_marginal(&[1, 1, 1], &Partition::single_group(2)).unwrap_err();
        assert_eq!(err, Error::UnassignedNode { node: 2 });
    }
}
