use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    ParamDomain(String),

    #[error("cutoff mismatch: {0} vs {1}")]
    CutoffMismatch(usize, usize),

    #[error("expected a {expected}-mode state, got {got} modes")]
    ModeCount { expected: usize, got: usize },

    #[error("truncation deficit {deficit:.3e} exceeds {threshold:.1e} at cutoff {cutoff}")]
    Truncation {
        deficit: f64,
        threshold: f64,
        cutoff: usize,
    },

    #[error("negativity not converged across cutoff sweep (delta {delta:.3e} > {tolerance:.1e})")]
    NotConverged { delta: f64, tolerance: f64 },

    #[error("need at least {needed} phases, got {got}")]
    TooFewPhases { needed: usize, got: usize },

    #[error("dataset problem: {0}")]
    Dataset(String),

    #[error("no physical solution: {0}")]
    NoSolution(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
