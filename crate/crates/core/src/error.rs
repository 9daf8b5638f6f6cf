use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} index {index} out of range (have {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    /// Every agent sits on the optimal alternative, so cost ratios are 0/0.
    #[error("degenerate instance: optimal social cost is zero")]
    DegenerateInstance,
    #[error("parameter out of domain: {0}")]
    Domain(String),
    #[error("not available: {0}")]
    NotAvailable(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("work estimate of {estimate} configurations exceeds budget of {budget}")]
    OverBudget { estimate: u64, budget: u64 },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
