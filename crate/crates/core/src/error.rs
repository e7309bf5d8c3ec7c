use thiserror::Error;

/// Errors raised by code construction, analysis and simulation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A code or trellis description is malformed.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Two frames or vectors that must agree in length do not.
    #[error("length mismatch for {what}: expected {expected}, got {actual}")]
    Length {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    /// A requested value lies outside its admissible range.
    #[error("{0}")]
    Domain(String),

    /// The requested D vector cannot be realized at this rate.
    #[error("infeasible dimensions: d2 = {d2} not in feasible interval [{lo}, {hi}] for L = {l}")]
    Infeasible { l: usize, d2: usize, lo: usize, hi: usize },

    /// All permeabilities are zero, so the rate is undefined.
    #[error("undefined rate: all permeability rates are zero")]
    UndefinedRate,

    /// An iterative or bracketed numerical procedure failed.
    #[error("numerical procedure did not converge: {0}")]
    NoConvergence(String),

    /// A constructive search (e.g. S-random interleaver) gave up.
    #[error("construction failed: {0}")]
    Construction(String),

    /// A text or JSON artifact could not be parsed.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Weight-enumerator truncation limits cannot capture the requested terms.
    #[error("enumerator truncation: {0}")]
    Truncation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(what: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::Length {
            what,
            expected,
            actual,
        })
    }
}
