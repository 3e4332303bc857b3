use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Errors raised by counting, scoring and search.
///
/// Nodes and groups are reported by dense index; callers holding a
/// [`NodeTable`](crate::NodeTable) translate them back to tokens.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("path {path} is empty")]
    EmptyPath { path: usize },

    #[error("path {path} references node index {node}, outside a universe of {universe} nodes")]
    UnknownNode { path: usize, node: u32, universe: usize },

    #[error("path {path} step {position}: transition {from} -> {to} is not an edge of the graph")]
    ConstraintViolation { path: usize, position: usize, from: u32, to: u32 },

    #[error("node {node} has no group label")]
    UnassignedNode { node: u32 },

    #[error("label {label} of node {node} is not below the label bound {n_labels}")]
    LabelOutOfRange { node: u32, label: u32, n_labels: u32 },

    #[error("order {requested} requested but counts only go up to order {available}")]
    OrderTooHigh { requested: usize, available: usize },

    #[error("{symbols} symbols at order {order} overflow the history encoding")]
    AlphabetTooLarge { symbols: usize, order: usize },

    #[error("group {successor} observed after history {history:?}, outside its successor set")]
    SuccessorOutsideSet { history: Vec<u32>, successor: u32 },

    #[error("{count} partitions exceed the exhaustive-search limit of {limit}")]
    TooManyPartitions { count: u128, limit: u128 },

    #[error("partitions cover {left} and {right} nodes")]
    SizeMismatch { left: usize, right: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
