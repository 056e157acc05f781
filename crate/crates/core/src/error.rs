use std::fmt;

use thiserror::Error;

/// Position of a diagnostic inside a text input (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Location {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid alphabet: {0}")]
    Alphabet(String),
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("alphabet mismatch between operands")]
    AlphabetMismatch,
    #[error("probability {0} is outside [0, 1]")]
    ProbabilityRange(String),
    #[error("frame action `{0}` is not an external action")]
    InvalidFrame(String),
    #[error("run() needs a nonempty set of external actions")]
    EmptyRun,
    #[error("malformed automaton: {0}")]
    Malformed(String),
    #[error("malformed relation: {0}")]
    Relation(String),
    #[error("invalid distribution: {0}")]
    Distribution(String),
    #[error("{location}: {message}")]
    Syntax { location: Location, message: String },
    #[error("witness construction failed: {0}")]
    Witness(String),
    #[error("unknown law `{0}`")]
    UnknownLaw(String),
    #[error("law `{law}` takes {expected} terms, got {got}")]
    Arity { law: String, expected: usize, got: usize },
    #[error("scenario error: {0}")]
    Scenario(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn syntax(line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Syntax {
            location: Location { line, column },
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
