use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("ground oracle refused: {vars} ground variables exceeds the bound of {bound}")]
    OracleBound { vars: usize, bound: usize },
    #[error("numeric overflow in linear mode: {0}")]
    Overflow(String),
    #[error("case-analysis order does not mention predicate {0}")]
    MissingPredicate(String),
    #[error("grounding a population of symbolic size {0} requires concrete sizes")]
    NeedsConcrete(String),
    #[error("toolchain failed: {0}")]
    Toolchain(String),
    #[error("could not parse program output: {0}")]
    Contract(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}
