use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Workspace-wide error type. The CLI maps variants to process exit codes:
/// configuration problems exit 2, numerical failures exit 3, anything else 1.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration, inputs that violate a documented precondition,
    /// or malformed config/replay files.
    #[error("config error: {0}")]
    Config(String),

    /// Numerical failure at runtime: loss of positive definiteness in an
    /// information matrix, or a solver that did not converge.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Numerical(_) => 3,
            _ => 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(Error::Config("x".into()).exit_code(), 2);
        assert_eq!(Error::Numerical("x".into()).exit_code(), 3);
        let io = Error::Io(std::io::Error::new(std::io::ErrorKind::Other, "x"));
        assert_eq!(io.exit_code(), 1);
    }

    #[test]
    fn messages_carry_context() {
        let e = Error::Config("graph.n: must be >= 1".into());
        assert_eq!(e.to_string(), "config error: graph.n: must be >= 1");
    }
}
