use curvlab::CurvError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config key '{key}': {msg}")]
    Config { key: String, msg: String },

    #[error("{0}")]
    Usage(String),

    #[error("i/o: {0}")]
    Io(String),

    #[error("integration stopped at t = {time}: {reason}")]
    Stopped { reason: String, time: f64 },

    #[error(transparent)]
    Core(#[from] CurvError),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Stopped { .. } | CliError::Core(CurvError::Integration { .. }) => 2,
            _ => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
