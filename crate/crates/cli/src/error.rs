use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Analysis(#[from] aclab::Error),

    #[error("cannot write outputs: {0}")]
    Io(#[from] std::io::Error),

    #[error("cannot write outputs: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// 2 for configuration problems, 4 for failures inside the analysis or
    /// while writing results.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 4,
        }
    }

    /// Library errors raised while setting up an experiment are problems
    /// with the configuration.
    pub fn setup(e: aclab::Error) -> Self {
        CliError::Config(e.to_string())
    }
}
