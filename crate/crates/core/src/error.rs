use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(String),
    #[error("E(u) is not Eisenstein at p: {0}")]
    NotEisenstein(String),
    #[error("attempted to invert zero")]
    ZeroInversion,
    #[error("series is not a unit (constant term vanishes)")]
    NotAUnit,
    #[error("series is not a uniformizer (needs c0 = 0 and c1 != 0)")]
    NotAUniformizer,
    #[error("series precision too low: need modulus {need}, got {got}")]
    PrecisionTooLow { need: usize, got: usize },
    #[error("operands live in different rings: {0}")]
    RingMismatch(String),
    #[error("pd-degree mismatch: {0}")]
    DegreeMismatch(String),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("not a stratification: {0}")]
    NotAStratification(String),
    #[error("Leibniz relation fails: {0}")]
    LeibnizViolation(String),
    #[error("bad truncation index {k} for modulus {m}")]
    BadTruncationIndex { k: usize, m: usize },
    #[error("invalid valuation: {0}")]
    InvalidValuation(String),
    #[error("operator family too short: need {need} operators, got {got}")]
    FamilyTooShort { need: usize, got: usize },
    #[error("parse error at {path}: {msg}")]
    Parse { path: String, msg: String },
}

impl Error {
    pub(crate) fn parse(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
