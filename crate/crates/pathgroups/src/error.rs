use std::path::PathBuf;

use pathgroups_core::{Error as ModelError, NodeTable};

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{source_name}:{line}: {message}")]
    Parse { source_name: String, line: usize, message: String },

    /// Files that disagree with each other, such as labels naming unknown nodes.
    #[error("{0}")]
    Input(String),

    #[error("{message}")]
    Model { message: String, source: ModelError },

    #[error("{0}")]
    Usage(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn parse(source_name: &str, line: usize, message: impl Into<String>) -> Self {
        CliError::Parse { source_name: source_name.to_owned(), line, message: message.into() }
    }

    /// Wraps a model error, spelling out node names where the error carries ids.
    pub fn model(source: ModelError, nodes: Option<&NodeTable>) -> Self {
        let name = |v: u32| match nodes {
            Some(t) if (v as usize) < t.len() => t.name(v).to_owned(),
            _ => format!("#{v}"),
        };
        let message = match &source {
            ModelError::ConstraintViolation { path, position, from, to } => format!(
                "path {} steps from {} to {} at position {position}, but the graph has no such edge",
                path + 1,
                name(*from),
                name(*to)
            ),
            ModelError::UnassignedNode { node } => format!("node {} has no label", name(*node)),
            ModelError::TooManyPartitions { count, limit } => format!(
                "exhaustive search would score {count} partitions (limit {limit}); lower --max-groups or use --search mh"
            ),
            ModelError::OrderTooHigh { requested, available } => {
                format!("order {requested} requested but counts were built up to order {available}; raise --k-max")
            }
            other => other.to_string(),
        };
        CliError::Model { message, source }
    }

    /// Process exit status: 2 usage, 3 io, 4 parse, 5 inconsistent inputs,
    /// 6 infeasible search size, 7 graph violation, 8 other model errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } | CliError::Json(_) | CliError::Csv(_) => 3,
            CliError::Parse { .. } => 4,
            CliError::Input(_) => 5,
            CliError::Model { source, .. } => match source {
                ModelError::TooManyPartitions { .. } => 6,
                ModelError::ConstraintViolation { .. } | ModelError::SuccessorOutsideSet { .. } => 7,
                ModelError::UnknownNode { .. } | ModelError::UnassignedNode { .. } | ModelError::EmptyPath { .. } => 5,
                _ => 8,
            },
        }
    }
}

impl From<ModelError> for CliError {
    fn from(source: ModelError) -> Self {
        CliError::model(source, None)
    }
}
