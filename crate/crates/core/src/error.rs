//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("interval division by zero-containing interval")]
    IntervalDivByZero,

    #[error("not a radius matrix: negative entry at ({0}, {1})")]
    NegativeRadiusEntry(usize, usize),

    #[error("coefficient-matching matrix rank deficient")]
    RankDeficient,

    #[error("monomial basis too small: `{0}` not in the product span")]
    MonomialOutsideSpan(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("point lies outside the box")]
    PointOutsideBox,

    #[error("domain violation in `{node}`: {detail}")]
    DomainViolation { node: String, detail: String },

    #[error("underdetermined fit: {points} mesh points for {unknowns} coefficients")]
    UnderdeterminedFit { points: usize, unknowns: usize },

    #[error("numerical failure in SDP solve: {0}")]
    SdpNumerical(String),

    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },

    #[error("semantic error: {0}")]
    Semantic(String),

    #[error("certificate error: {0}")]
    Certificate(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
