use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("line {line}: {source}")]
    AtLine { line: u64, source: cic::Error },

    #[error("{0}")]
    Io(String),

    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] cic::Error),
}

impl CliError {
    /// Every error is an input error.
    pub fn exit_code(&self) -> i32 {
        2
    }
}
