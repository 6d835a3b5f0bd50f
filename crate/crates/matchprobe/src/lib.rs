//! Stable matching with one-sided preference uncertainty.
//!
//! The A side's preference lists are known; the B side's are hidden behind
//! query oracles (pairwise comparisons, interviews, or set queries). This
//! crate provides:
//!
//! - the data model and full-information baselines ([`model`], [`fixtures`]),
//! - partial-knowledge bookkeeping and certificate predicates ([`knowledge`]),
//! - query oracles with transcripts and counting ([`oracle`]),
//! - rotations and the candidate-edge digraph behind B-optimality
//!   certificates ([`rotation`]),
//! - online verification and finding algorithms ([`verify`], [`solve`]),
//! - offline optima: brute-force minimum certificates, feedback-arc-set
//!   based certifiers, and hardness-reduction generators ([`offline`]),
//! - adaptive adversaries that force scanning algorithms into many queries
//!   while keeping a short certificate ([`adversary`]).

pub mod adversary;
pub mod fixtures;
pub mod knowledge;
pub mod model;
pub mod offline;
pub mod oracle;
pub mod rotation;
pub mod solve;
pub mod verify;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Online code tried to read hidden B-side preferences directly.
    #[error("hidden-preference access: realization is not available; use the query oracles")]
    HiddenRealization,

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    /// A recorded answer contradicts earlier answers (broken oracle or
    /// adversary).
    #[error("inconsistent answers: {0}")]
    InconsistentAnswers(String),

    /// The semantic oracle or brute-force search was asked for an instance
    /// above its configured size limit.
    #[error("oracle size limit: n={n} exceeds limit {limit}")]
    OracleLimit { n: usize, limit: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// No finite-weight feedback set exists for the given graph.
    #[error("no finite-weight feedback set exists")]
    NoFiniteCover,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Default size cap for the exponential semantic certifier and the
/// brute-force certificate search. Overridable via the
/// `MATCHPROBE_ORACLE_LIMIT` environment variable.
pub const DEFAULT_ORACLE_LIMIT: usize = 6;

/// Resolve the brute-force size cap from the environment, falling back to
/// [`DEFAULT_ORACLE_LIMIT`].
pub fn oracle_limit() -> usize {
    std::env::var("MATCHPROBE_ORACLE_LIMIT")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_ORACLE_LIMIT)
}
