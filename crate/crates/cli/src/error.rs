use std::fmt;

use topicalign_core::Error as CoreError;

/// Process exit codes.
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: CoreError,
    },
}

impl CliError {
    pub fn config(msg: impl fmt::Display) -> Self {
        CliError::Config(msg.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Stage { source, .. } => match source {
                CoreError::Numeric(_) => EXIT_NUMERIC,
                CoreError::UnsupportedPattern(_) => EXIT_CONFIG,
                _ => EXIT_DATA,
            },
        }
    }

    /// Name of the failing stage, if any.
    pub fn stage(&self) -> Option<&str> {
        match self {
            CliError::Config(_) => None,
            CliError::Stage { stage, .. } => Some(stage),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Attaches a stage name to core errors.
pub trait StageContext<T> {
    fn stage(self, stage: &str) -> CliResult<T>;
}

impl<T> StageContext<T> for topicalign_core::Result<T> {
    fn stage(self, stage: &str) -> CliResult<T> {
        self.map_err(|source| CliError::Stage {
            stage: stage.to_string(),
            source,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_class() {
        assert_eq!(CliError::config("x").exit_code(), 2);
        let data: topicalign_core::Result<()> = Err(CoreError::EmptyAssignment);
        assert_eq!(data.stage("delineate").unwrap_err().exit_code(), 3);
        let numeric: topicalign_core::Result<()> = Err(CoreError::Numeric("nan".into()));
        let err = numeric.stage("map").unwrap_err();
        assert_eq!(err.exit_code(), 4);
        assert_eq!(err.stage(), Some("map"));
    }
}
