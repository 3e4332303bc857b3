//! Adjusted mutual information and the experiment protocols built on search.

use alloc::vec;
use alloc::vec::Vec;

use crate::corpus::Partition;
use crate::counts::LayeredCounts;
use crate::dynamics::{OrderSelection, SuccessorRule};
use crate::error::{Error, Result};
use crate::hog::{score_partition, ScoredPartition, ScoringMode};
use crate::search::{mh_restarts, mh_search, MhConfig, RestartResult, SearchTrace};
use crate::special::ln_gamma;

/// Name of the entropy normalizer used by [`ami`], for reporting.
pub const AMI_NORMALIZER: &str = "arithmetic";

/// Co-occurrence counts of two partitions over the same nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    cells: Vec<Vec<u64>>,
    rows: Vec<u64>,
    cols: Vec<u64>,
    total: u64,
}

impl ContingencyTable {
    pub fn new(u: &Partition, v: &Partition) -> Result<Self> {
        if u.len() != v.len() {
            return Err(Error::SizeMismatch { left: u.len(), right: v.len() });
        }
        let (u, v) = (u.canonical(), v.canonical());
        let (r, c) = (u.effective_groups(), v.effective_groups());
        let mut cells = vec![vec![0u64; c]; r];
        for (&a, &b) in u.labels().iter().zip(v.labels()) {
            cells[a as usize][b as usize] += 1;
        }
        Ok(Self::from_cells(cells))
    }

    /// Table from raw cell counts; empty rows and columns are allowed.
    pub fn from_cells(cells: Vec<Vec<u64>>) -> Self {
        let rows: Vec<u64> = cells.iter().map(|r| r.iter().sum()).collect();
        let n_cols = cells.first().map_or(0, Vec::len);
        let cols: Vec<u64> = (0..n_cols).map(|j| cells.iter().map(|r| r[j]).sum()).collect();
        let total = rows.iter().sum();
        Self { cells, rows, cols, total }
    }

    pub fn cells(&self) -> &[Vec<u64>] {
        &self.cells
    }

    pub fn row_sums(&self) -> &[u64] {
        &self.rows
    }

    pub fn col_sums(&self) -> &[u64] {
        &self.cols
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Mutual information in nats.
    pub fn mutual_information(&self) -> f64 {
        let n = self.total as f64;
        let mut mi = 0.0;
        for (i, row) in self.cells.iter().enumerate() {
            for (j, &nij) in row.iter().enumerate() {
                if nij > 0 {
                    let nij = nij as f64;
                    mi += nij / n * libm::log(n * nij / (self.rows[i] as f64 * self.cols[j] as f64));
                }
            }
        }
        mi.max(0.0)
    }

    pub fn row_entropy(&self) -> f64 {
        entropy(&self.rows, self.total)
    }

    pub fn col_entropy(&self) -> f64 {
        entropy(&self.cols, self.total)
    }

    /// Expected mutual information when both partitions are drawn uniformly
    /// at random with these marginals (hypergeometric cell distribution).
    pub fn expected_mutual_information(&self) -> f64 {
        let n = self.total;
        let nf = n as f64;
        let ln_n_fact = ln_gamma(nf + 1.0);
        let mut emi = 0.0;
        for &a in &self.rows {
            for &b in &self.cols {
                if a == 0 || b == 0 {
                    continue;
                }
                let fixed = ln_gamma(a as f64 + 1.0) + ln_gamma(b as f64 + 1.0) + ln_gamma((n - a) as f64 + 1.0) + ln_gamma((n - b) as f64 + 1.0)
                    - ln_n_fact;
                let lo = (a + b).saturating_sub(n).max(1);
                for nij in lo..=a.min(b) {
                    let ln_p = fixed
                        - ln_gamma(nij as f64 + 1.0)
                        - ln_gamma((a - nij) as f64 + 1.0)
                        - ln_gamma((b - nij) as f64 + 1.0)
                        - ln_gamma((n + nij - a - b) as f64 + 1.0);
                    let x = nij as f64;
                    emi += x / nf * libm::log(nf * x / (a as f64 * b as f64)) * libm::exp(ln_p);
                }
            }
        }
        emi
    }
}

fn entropy(marginal: &[u64], total: u64) -> f64 {
    let n = total as f64;
    marginal
        .iter()
        .filter(|&&m| m > 0)
        .map(|&m| {
            let p = m as f64 / n;
            -p * libm::log(p)
        })
        .sum()
}

/// Adjusted mutual information with the arithmetic-mean normalizer.
///
/// Identical groupings (under any labeling) give exactly 1. If both
/// partitions are a single group the result is 1; if exactly one is, 0.
pub fn ami(u: &Partition, v: &Partition) -> Result<f64> {
    let table = ContingencyTable::new(u, v)?;
    if u.same_grouping(v) {
        return Ok(1.0);
    }
    let (r, c) = (table.rows.len(), table.cols.len());
    if r <= 1 || c <= 1 {
        return Ok(if r <= 1 && c <= 1 { 1.0 } else { 0.0 });
    }
    Ok(ami_from_table(&table))
}

pub(crate) fn ami_from_table(table: &ContingencyTable) -> f64 {
    let mi = table.mutual_information();
    let emi = table.expected_mutual_information();
    let mean_h = 0.5 * (table.row_entropy() + table.col_entropy());
    let mut denom = mean_h - emi;
    if denom.abs() < f64::EPSILON {
        denom = if denom < 0.0 { -f64::EPSILON } else { f64::EPSILON };
    }
    ((mi - emi) / denom).min(1.0)
}

/// Joint log evidence of fixed labels at every order `0..=K`, no search.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderScan {
    pub scores: Vec<ScoredPartition>,
    pub selection: OrderSelection,
}

impl OrderScan {
    pub fn log_marginals(&self) -> Vec<f64> {
        self.scores.iter().map(|s| s.log_marginal).collect()
    }
}

pub fn order_scan_fixed_labels(
    node_counts: &LayeredCounts,
    labels: &Partition,
    max_order: usize,
    rule: &SuccessorRule,
    bf_threshold: f64,
) -> Result<OrderScan> {
    let scores = (0..=max_order)
        .map(|k| score_partition(node_counts, labels, ScoringMode::Fixed { order: k }, rule))
        .collect::<Result<Vec<_>>>()?;
    let selection = OrderSelection::from_log_marginals(scores.iter().map(|s| s.log_marginal).collect(), bf_threshold);
    Ok(OrderScan { scores, selection })
}

/// Best results of restart families searched at two fixed orders.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedOrderComparison {
    pub first: (usize, RestartResult),
    pub second: (usize, RestartResult),
}

/// Searches partitions twice, scoring at `order_a` and then at `order_b`,
/// with `runs` restarts each drawn from `config.seed`.
pub fn compare_fixed_orders(
    node_counts: &LayeredCounts,
    order_a: usize,
    order_b: usize,
    config: &MhConfig,
    rule: &SuccessorRule,
    runs: usize,
) -> Result<FixedOrderComparison> {
    let run = |order| {
        let cfg = MhConfig { mode: ScoringMode::Fixed { order }, ..*config };
        mh_restarts(node_counts, &cfg, rule, runs).map(|r| (order, r))
    };
    Ok(FixedOrderComparison { first: run(order_a)?, second: run(order_b)? })
}

/// Runs a chain started from `labels`, tracking the AMI of the best
/// partition against those labels.
pub fn optimize_from_labels(
    node_counts: &LayeredCounts,
    labels: &Partition,
    config: &MhConfig,
    rule: &SuccessorRule,
) -> Result<(ScoredPartition, SearchTrace)> {
    let cfg = MhConfig { max_groups: config.max_groups.max(labels.n_labels()), ..*config };
    mh_search(node_counts, &cfg, rule, Some(labels), Some(labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_partitions_score_one() {
        let u = Partition::from_labels(vec![0, 0, 1, 1, 2]);
        let v = Partition::from_labels(vec![2, 2, 0, 0, 1]);
        assert_eq!(ami(&u, &v).unwrap(), 1.0);
        assert_eq!(ami(&u, &u).unwrap(), 1.0);
    }

    #[test]
    fn constant_versus_varied_scores_zero() {
        let u = Partition::single_group(4);
        let v = Partition::from_labels(vec![0, 1, 0, 1]);
        assert_eq!(ami(&u, &v).unwrap(), 0.0);
        assert_eq!(ami(&v, &u).unwrap(), 0.0);
    }

    #[test]
    fn crossed_halves() {
        // MI = 0, E[MI] = ln(2) / 3, H = ln 2: AMI = -1/2
        let u = Partition::from_labels(vec![0, 0, 1, 1]);
        let v = Partition::from_labels(vec![0, 1, 0, 1]);
        let t = ContingencyTable::new(&u, &v).unwrap();
        assert!(t.mutual_information().abs() < 1e-15);
        assert!((t.expected_mutual_information() - core::f64::consts::LN_2 / 3.0).abs() < 1e-12);
        assert!((ami(&u, &v).unwrap() + 0.5).abs() < 1e-12);
    }

    #[test]
    fn symmetric() {
        let u = Partition::from_labels(vec![0, 0, 1, 1, 2, 2, 0]);
        let v = Partition::from_labels(vec![0, 1, 1, 1, 0, 2, 2]);
        assert!((ami(&u, &v).unwrap() - ami(&v, &u).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn size_mismatch() {
        let u = Partition::from_labels(vec![0, 1]);
        let v = Partition::from_labels(vec![0, 1, 1]);
        assert_eq!(ami(&u, &v).unwrap_err(), Error::SizeMismatch { left: 2, right: 3 });
    }
}
