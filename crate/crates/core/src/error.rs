use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain an evaluator supports.
    #[error("domain error: {0}")]
    Domain(String),

    /// The similarity variable of a weight left the range covered by the series evaluator.
    #[error("range error: {0}")]
    Range(String),

    /// A configuration violated one or more parameter constraints.
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Config(Vec<String>),

    /// A time stepper produced non-finite values.
    #[error("divergence at step {step}: {what}")]
    Divergence { step: usize, what: String },

    /// The weight potential could not be constructed.
    #[error("construction error: {0}")]
    Construction(String),

    /// Fields or grids do not conform.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// A decay fit could not be performed.
    #[error("fit error: {0}")]
    Fit(String),

    /// A sub-solve of the profile cascade failed.
    #[error("cascade member ({j},{k}): {source}")]
    Cascade {
        j: usize,
        k: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
