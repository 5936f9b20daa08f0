use thiserror::Error;
use wpcn_core::Error as CoreError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("I/O error: {0}")]
    Io(String),

    /// Malformed or inconsistent experiment file.
    #[error("config error: {0}")]
    Parse(String),

    /// A joint chain exceeds the enumeration limits.
    #[error("{0}")]
    Guard(String),

    #[error("{0}")]
    Convergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Parse(_) => 2,
            CliError::Guard(_) => 3,
            CliError::Convergence(_) => 4,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        let msg = err.to_string();
        match err {
            CoreError::Domain(_) | CoreError::InvalidConfig(_) => CliError::Parse(msg),
            CoreError::StateSpaceTooLarge { .. } => CliError::Guard(msg),
            CoreError::Convergence { .. } | CoreError::Singular(_) => CliError::Convergence(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Io(err.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn core_errors_map_to_distinct_codes() {
        let cases = [
            (CoreError::InvalidConfig("x".into()), 2),
            (CoreError::Domain("x".into()), 2),
            (
                CoreError::StateSpaceTooLarge {
                    what: "states",
                    size: 10,
                    limit: 1,
                },
                3,
            ),
            (
                CoreError::Convergence {
                    solver: "Newton",
                    iterations: 1,
                    residual: 1.0,
                },
                4,
            ),
            (CoreError::Singular(0), 4),
        ];
        for (err, code) in cases {
            assert_eq!(CliError::from(err).exit_code(), code);
        }
        assert_eq!(CliError::Io("x".into()).exit_code(), 1);
    }
}
