use thiserror::Error;

use crate::elemental::TreeViolation;
use crate::model::{ElementRef, Violation};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Text did not parse as the expected document.
    #[error("parse error: {0}")]
    Parse(String),

    /// The document parsed but breaks instance invariants.
    #[error("invalid instance: {}", join_violations(.0))]
    InvalidInstance(Vec<Violation>),

    #[error("invalid matching: {0}")]
    InvalidMatching(String),

    #[error("rank is undefined within a single party (party {party})")]
    SameParty { party: usize },

    #[error("party index {party} out of range for {parties} parties")]
    PartyOutOfRange { party: usize, parties: usize },

    #[error("element {0} does not appear in the matching")]
    NotInMatching(ElementRef),

    #[error("candidate family already belongs to the matching")]
    CandidateInMatching,

    #[error("invalid tree: {0}")]
    InvalidTree(TreeViolation),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    /// A plan or recipe does not fit the instance it is applied to.
    #[error("structure mismatch ({context}): {message}")]
    Structure { context: String, message: String },

    /// An elemental run exceeded `(p - 1)(n^2 - 2n + 2)` rounds.
    #[error("p = {p}, n = {n}, seed {seed}: {rounds} rounds exceed the bound {bound}")]
    RoundBound {
        p: usize,
        n: usize,
        seed: u64,
        rounds: usize,
        bound: usize,
    },

    /// An exhaustive search would exceed its configured size guard.
    #[error("{what}: size {size} exceeds the guard of {limit}; raise the limit to proceed")]
    Guard {
        what: &'static str,
        size: u128,
        limit: u128,
    },
}

impl Error {
    pub(crate) fn structure(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Structure {
            context: context.into(),
            message: message.into(),
        }
    }
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}
