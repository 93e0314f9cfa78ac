use thiserror::Error;

use crate::profile::Candidate;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProfileError {
    #[error("candidate label is empty")]
    EmptyLabel,
    #[error("invalid candidate label {0:?}")]
    InvalidLabel(String),
    #[error("ranking has an empty tier")]
    EmptyTier,
    #[error("ranking has no candidates")]
    EmptyRanking,
    #[error("candidate {0} appears more than once")]
    DuplicateCandidate(Candidate),
    #[error("profile has no candidates")]
    NoCandidates,
    #[error("profile has no voters")]
    NoVoters,
    #[error("ranking {ranking} does not rank exactly the profile's candidates")]
    CandidateMismatch { ranking: String },
    #[error("profiles have different candidate sets")]
    CandidateSetMismatch,
    #[error("unknown candidate {0}")]
    UnknownCandidate(Candidate),
    #[error("cannot remove the last candidate")]
    LastCandidate,
    #[error("cannot remove {requested} voters with ranking {ranking}: only {available} present")]
    InsufficientBallots {
        ranking: String,
        requested: u64,
        available: u64,
    },
    #[error("margin matrix is not antisymmetric with zero diagonal")]
    NotAntisymmetric,
}

/// A parse failure with its 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MethodError {
    #[error("unknown method {0:?}")]
    UnknownMethod(String),
    #[error("ranked pairs tie-breaking needs more than {cap} parallel universes")]
    TieExplosion { cap: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AxiomError {
    #[error("unknown axiom {0:?}")]
    UnknownAxiom(String),
    #[error("malformed ballot: {0}")]
    MalformedBallot(String),
    #[error("{0} is not a set of clones")]
    NotCloneSet(String),
    #[error("voter bound {requested} exceeds the configured limit {limit}")]
    BoundExceeded { requested: usize, limit: usize },
    #[error("missing input: {0}")]
    MissingInput(String),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Method(#[from] MethodError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthError {
    #[error("target margins do not share a single parity")]
    Parity,
    #[error("no profile over the pool realizes the target with at most {cap} voters")]
    Infeasible { cap: u64 },
    #[error("ranking pool is empty")]
    EmptyPool,
    #[error("node budget exhausted after {explored} nodes without a solution")]
    BudgetExhausted { explored: u64 },
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("voter bound {requested} exceeds the configured limit {limit}")]
    BoundExceeded { requested: u64, limit: u64 },
    #[error("unknown sequence {0:?}")]
    UnknownSequence(String),
    #[error(transparent)]
    Profile(#[from] ProfileError),
}
