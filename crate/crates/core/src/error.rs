use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cycle detected through node `{0}`")]
    Cycle(String),
    #[error("duplicate edge `{0}` -> `{1}`")]
    DuplicateEdge(String, String),
    #[error("node `{0}` has more than one parent in tree mode")]
    MultipleParents(String),
    #[error("empty node name in hierarchy row {0}")]
    EmptyName(usize),
    #[error("invalid node id {id} (hierarchy has {count} nodes)")]
    InvalidNode { id: usize, count: usize },
    #[error("unknown class `{0}`")]
    UnknownClass(String),
    #[error("operation requires a tree/forest hierarchy")]
    NotATree,
    #[error("operation requires a DAG-mode hierarchy")]
    NotADag,
    #[error("size mismatch: expected {expected}, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },
    #[error("ranking is not a permutation of the events")]
    NotAPermutation,
    #[error("class `{0}` has no positive training labels")]
    NoPositives(String),
    #[error("class `{class}` needs at least {needed} positive and negative samples")]
    TooFewSamples { class: String, needed: usize },
    #[error("need at least {needed} training objects, got {actual}")]
    TooFewObjects { needed: usize, actual: usize },
    #[error("neighborhood of `{class}` has {size} nodes (limit {limit})")]
    NeighborhoodTooLarge { class: String, size: usize, limit: usize },
    #[error("brute force supports at most {limit} events, got {actual}")]
    TooManyEvents { limit: usize, actual: usize },
    #[error("no positive labels: recall undefined")]
    NoPositiveLabels,
    #[error("rejection sampling exceeded {0} attempts")]
    RejectionBudget(usize),
    #[error("AND constraint infeasible within the reduction budget")]
    AndInfeasible,
    #[error("OR constraint requires enumeration but {reductions} reductions exceed budget {budget}")]
    OrNeedsEnumeration { reductions: u128, budget: u128 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag used in the CLI's error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Cycle(_) => "cycle",
            Error::DuplicateEdge(..) => "duplicate_edge",
            Error::MultipleParents(_) => "multiple_parents",
            Error::EmptyName(_) => "empty_name",
            Error::InvalidNode { .. } => "invalid_node",
            Error::UnknownClass(_) => "unknown_class",
            Error::NotATree => "not_a_tree",
            Error::NotADag => "not_a_dag",
            Error::SizeMismatch { .. } => "size_mismatch",
            Error::NotAPermutation => "not_a_permutation",
            Error::NoPositives(_) => "no_positives",
            Error::TooFewSamples { .. } => "too_few_samples",
            Error::TooFewObjects { .. } => "too_few_objects",
            Error::NeighborhoodTooLarge { .. } => "neighborhood_too_large",
            Error::TooManyEvents { .. } => "too_many_events",
            Error::NoPositiveLabels => "no_positive_labels",
            Error::RejectionBudget(_) => "rejection_budget",
            Error::AndInfeasible => "and_infeasible",
            Error::OrNeedsEnumeration { .. } => "or_needs_enumeration",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
            Error::Parse(_) => "parse",
        }
    }
}
