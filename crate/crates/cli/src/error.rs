use thiserror::Error;

/// Failure of a command, carrying its exit status.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config file or output location. Exit 1.
    #[error("config: {0}")]
    Config(String),
    /// Unreadable, malformed or mismatched input data. Exit 2.
    #[error("data: {0}")]
    Data(String),
    /// The numerical core failed. Exit 3.
    #[error("{module}: {message}")]
    Numerical {
        module: &'static str,
        message: String,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical { .. } => 3,
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        CliError::Config(message.into())
    }

    pub fn data(message: impl Into<String>) -> Self {
        CliError::Data(message.into())
    }

    /// Writing an artifact failed; the output location is part of the
    /// configuration.
    pub fn output(path: &std::path::Path, err: impl std::fmt::Display) -> Self {
        CliError::Config(format!("cannot write {}: {err}", path.display()))
    }
}

impl From<bmfpp::Error> for CliError {
    fn from(err: bmfpp::Error) -> Self {
        use bmfpp::Error as E;
        if err.is_numerical() {
            return CliError::Numerical {
                module: numerical_module(&err),
                message: err.to_string(),
            };
        }
        let message = err.to_string();
        let mut root = &err;
        while let E::Block { source, .. } = root {
            root = source;
        }
        match root {
            E::InvalidArgument(_) => CliError::Config(message),
            _ => CliError::Data(message),
        }
    }
}

fn numerical_module(err: &bmfpp::Error) -> &'static str {
    match err {
        bmfpp::Error::Block { .. } => "scheduler",
        bmfpp::Error::Aggregation { .. } => "posterior",
        _ => "samplers",
    }
}
