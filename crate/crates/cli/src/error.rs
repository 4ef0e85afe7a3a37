use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("infeasible scenario: {0}")]
    Infeasible(String),
    #[error("reproduction outside tolerance: {0}")]
    Tolerance(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) | CliError::Csv(_) => 1,
            CliError::Infeasible(_) => 2,
            CliError::Tolerance(_) => 3,
        }
    }
}
