use std::fmt;

/// Exit code 2 for configuration and usage errors, 3 for failed computations.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Self { code: 3, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<msgabor::Error> for CliError {
    fn from(e: msgabor::Error) -> Self {
        match e {
            msgabor::Error::Invalid(_) | msgabor::Error::SingularBasis | msgabor::Error::NoInternalSpace => {
                Self::config(e.to_string())
            }
            _ => Self::runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::runtime(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::runtime(e.to_string())
    }
}
