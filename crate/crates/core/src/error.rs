use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("graph parse error at line {line}, column {column}: {message}")]
    GraphParse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("cost model parse error at line {line}, column {column}: {message}")]
    CostParse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid cost model: {0}")]
    InvalidCost(String),

    #[error("label error: {0}")]
    Label(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("not a permutation: {0}")]
    NotPermutation(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    EigenNoConvergence { sweeps: usize, off_norm: f64 },

    #[error("padded order {order} exceeds the exact-solver budget of {budget}")]
    BudgetExceeded { order: usize, budget: usize },

    #[error("invalid solver configuration: {0}")]
    Config(String),

    #[error("invalid generator parameters: {0}")]
    Generator(String),

    #[error("invalid corpus: {0}")]
    Corpus(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
