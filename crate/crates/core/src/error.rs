use thiserror::Error;

pub type Result<T> = std::result::Result<T, SpoError>;

#[derive(Debug, Error)]
pub enum SpoError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid probability row: {0}")]
    InvalidRow(String),

    #[error("failed to converge: {0}")]
    Convergence(String),

    #[error("budget unattainable: divergence at beta={beta_floor} is {divergence}, cannot reach kappa={kappa}")]
    BudgetUnattainable {
        kappa: f64,
        beta_floor: f64,
        divergence: f64,
    },

    #[error("kernel bank is cold: {have} entries, need at least {need}")]
    ColdBank { have: usize, need: usize },

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}
