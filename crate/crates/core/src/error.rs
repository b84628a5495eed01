//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors raised by the algebra, oracles, experiments and persistence layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("letter {letter} is not a generator of the free group of rank {rank}")]
    InvalidLetter { letter: i32, rank: usize },
    #[error("rank mismatch: expected {expected}, found {found}")]
    RankMismatch { expected: usize, found: usize },
    #[error("not a basis: {0}")]
    NotABasis(String),
    #[error("cannot parse {what} from {detail:?}{}", offset.map(|o| format!(" at offset {o}")).unwrap_or_default())]
    Parse { what: &'static str, detail: String, offset: Option<usize> },
    #[error("trivial word where a nontrivial one is required")]
    TrivialWord,
    #[error("invalid splitting: {0}")]
    InvalidSplitting(String),
    #[error("equal arguments where distinct ones are required")]
    EqualArguments,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("not found within search bound: {0}")]
    NotFound(String),
    #[error("oracle saturation: {unknown} of {total} answers unknown")]
    Saturation { unknown: usize, total: usize },
    #[error("value unavailable: {0}")]
    Unavailable(String),
    #[error("projection undefined: {0}")]
    ProjectionUndefined(String),
    #[error("cache header mismatch: {0}")]
    HeaderMismatch(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
