use thiserror::Error;

use crate::lattice::CurveClass;
use crate::relations::{RealKey, RelationKind};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid class: expected {expected} coefficients, got {got}")]
    InvalidClass { expected: usize, got: usize },

    #[error("invalid surface model: {0}")]
    InvalidModel(String),

    #[error("conjugation action is not injective after subtracting from the identity; halving is undefined")]
    NonInjectiveConjugation,

    #[error("invalid divisor triple: {0}")]
    InvalidDivisorTriple(String),

    #[error("invalid degree {0}: must be at least 1")]
    InvalidDegree(i64),

    #[error("no complex invariant available for class {0}")]
    MissingComplexValue(CurveClass),

    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("conflicting entries for {key}: {first} vs {second}")]
    ConflictingEntry { key: String, first: String, second: String },

    #[error("{kind} does not apply to {key}: {reason}")]
    GateViolation {
        kind: RelationKind,
        key: RealKey,
        reason: String,
    },

    #[error("relation at {key} references {factor}, which is not of strictly smaller degree")]
    IllFounded { key: RealKey, factor: RealKey },

    #[error("inconsistent system at degree {degree}: {detail}")]
    InconsistentSystem { degree: i64, detail: String },

    #[error(
        "nonlinear frontier at degree {degree}: products of unresolved invariants {} survive substitution; \
         try additional divisor triples or seeds, or defer nonlinear equations",
        join_keys(keys)
    )]
    NonlinearFrontier { degree: i64, keys: Vec<RealKey> },

    #[error("value of {0} is not an integer: {1}")]
    NonIntegral(RealKey, String),

    #[error("unresolved invariant {0}")]
    UnknownKey(RealKey),

    #[error("mismatch at {key}: {left} vs {right}")]
    Mismatch { key: RealKey, left: String, right: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

fn join_keys(keys: &[RealKey]) -> String {
    keys.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

impl Error {
    pub(crate) fn parse(source_name: &str, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.to_string(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
