use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: photosub::Error,
    },

    #[error(transparent)]
    Core(#[from] photosub::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    fn core(&self) -> Option<&photosub::Error> {
        match self {
            CliError::Stage { source, .. } | CliError::Core(source) => Some(source),
            _ => None,
        }
    }

    /// 2 for invalid input or parameters, 3 for non-convergence, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        use photosub::Error as E;
        match (self, self.core()) {
            (CliError::Config(_), _) => 2,
            (_, Some(E::NotConverged { .. })) => 3,
            (_, Some(E::Io(_) | E::Csv(_) | E::Json(_))) => 1,
            (_, Some(_)) => 2,
            _ => 1,
        }
    }
}

/// Attaches a pipeline stage label to core errors.
pub trait StageExt<T> {
    fn stage(self, stage: &'static str) -> CliResult<T>;
}

impl<T> StageExt<T> for photosub::Result<T> {
    fn stage(self, stage: &'static str) -> CliResult<T> {
        self.map_err(|source| CliError::Stage { stage, source })
    }
}
