use std::io;

use thiserror::Error;

/// Errors produced by the taxonomy, inference, ranking and evaluation layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },

    #[error("line {line}: self-loop edge on `{term}`")]
    SelfLoop { line: usize, term: String },

    #[error("unknown term `{0}`")]
    UnknownTerm(String),

    #[error("unresolvable entities: {}", .0.join(", "))]
    UnresolvableEntities(Vec<String>),

    #[error("`{0}` has no hyponyms")]
    NoHyponyms(String),

    #[error("`{0}` has no hypernyms")]
    NoHypernyms(String),

    #[error("empty query")]
    EmptyQuery,

    #[error("unconceptualizable query: no concept relates to any query entity")]
    Unconceptualizable,

    #[error("empty concept distribution")]
    EmptyDistribution,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no valid ground-truth lists")]
    NoLists,

    #[error("mixed list formats: {0}")]
    MixedFormats(String),

    #[error("not enough usable pairs for a t-test: {0}")]
    InsufficientPairs(usize),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
