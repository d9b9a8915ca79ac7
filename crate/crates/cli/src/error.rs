use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("output error: {0}")]
    Output(String),

    #[error(transparent)]
    Core(#[from] erlmix::Error),
}

impl CliError {
    /// 2 for configuration, 3 for data, 4 for numeric failures.
    pub fn exit_code(&self) -> u8 {
        use erlmix::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) | CliError::Output(_) => 3,
            CliError::Core(e) => match e {
                E::Config(_) => 2,
                E::Data(_) | E::Parse { .. } | E::Io(_) | E::Csv(_) => 3,
                E::Domain(_) | E::Numeric(_) => 4,
            },
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Output(e.to_string())
    }
}
