use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("symbol {symbol} outside domain of size {domain_size}")]
    DomainViolation { symbol: u64, domain_size: usize },

    #[error("sample of odd length {0} cannot be split into halves")]
    OddLength(usize),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("degenerate interval [{a}, {b}]")]
    DegenerateInterval { a: f64, b: f64 },

    #[error("exact oracle limited to N <= {max_domain} and n <= {max_length} (got N = {domain}, n = {length}); use the approximate solver")]
    OracleScale {
        domain: usize,
        length: usize,
        max_domain: usize,
        max_length: usize,
    },

    #[error("infeasible support constraint: k = {k} < {distinct} distinct observed symbols")]
    InfeasibleSupport { k: usize, distinct: usize },

    #[error("solver configuration: {0}")]
    Config(String),

    #[error("count {count} exceeds sample size {n}")]
    CountExceedsLength { count: usize, n: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
