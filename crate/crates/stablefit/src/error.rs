use std::path::PathBuf;

/// Failure of a command. Each kind maps to its own process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("bad input data: {0}")]
    Data(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

impl CliError {
    pub const EXIT_CONFIG: u8 = 2;
    pub const EXIT_DATA: u8 = 3;
    pub const EXIT_NUMERICAL: u8 = 4;
    pub const EXIT_IO: u8 = 5;

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => Self::EXIT_CONFIG,
            CliError::Data(_) => Self::EXIT_DATA,
            CliError::Numerical(_) => Self::EXIT_NUMERICAL,
            CliError::Io { .. } => Self::EXIT_IO,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<stablefit_core::Error> for CliError {
    fn from(e: stablefit_core::Error) -> Self {
        use stablefit_core::Error as E;
        match e {
            e if e.is_numerical() => CliError::Numerical(e.to_string()),
            E::InvalidConfig(_) | E::InvalidParameter { .. } => CliError::Config(e.to_string()),
            e => CliError::Data(e.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use stablefit_core::Error as E;

    #[test]
    fn codes_are_distinct() {
        let errs = [
            CliError::Config(String::new()),
            CliError::Data(String::new()),
            CliError::Numerical(String::new()),
            CliError::io("x", std::io::Error::other("y")),
        ];
        let codes: Vec<u8> = errs.iter().map(CliError::exit_code).collect();
        assert_eq!(codes, [2, 3, 4, 5]);
    }

    #[test]
    fn core_errors_map_by_kind() {
        assert_eq!(CliError::from(E::ConvergenceFailure("nm")).exit_code(), CliError::EXIT_NUMERICAL);
        assert_eq!(CliError::from(E::InvalidConfig("k")).exit_code(), CliError::EXIT_CONFIG);
        assert_eq!(CliError::from(E::SampleTooSmall { needed: 2, got: 1 }).exit_code(), CliError::EXIT_DATA);
    }
}
