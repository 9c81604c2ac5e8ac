use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("argument error: {0}")]
    Argument(String),
    #[error("kernel is singular at r = 0; the diagonal needs the cell-averaged rule")]
    Singular,
    #[error("empty operator: the potential vanishes on the grid")]
    EmptyOperator,
    #[error("singular block `{block}`: {detail}")]
    SingularBlock { block: &'static str, detail: String },
    #[error("ill-conditioned classification at stage {stage}: gap {gap:.3e} < {min_gap}")]
    IllConditioned { stage: u8, gap: f64, min_gap: f64 },
    #[error("inconsistent classification: {0}")]
    Inconsistent(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("misuse: {0}")]
    Misuse(String),
    #[error("truncation: {0}")]
    Truncation(String),
    #[error("under-resolved quadrature: {0}")]
    UnderResolved(String),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
