use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no open facility")]
    NoOpenFacility,
    #[error("empty candidate set")]
    EmptySet,
    #[error("invalid instance: {0}")]
    Instance(String),
    #[error("infeasible sizes: {0}")]
    Infeasible(String),
    #[error("g undefined: secondary stars unavailable")]
    GUndefined,
    #[error("non-monotone thresholds: {0}")]
    Thresholds(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid argument: {0}")]
    Arg(String),
    #[error("budget exceeded: {needed} subsets needed, budget {budget}")]
    Budget { needed: u128, budget: u128 },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
