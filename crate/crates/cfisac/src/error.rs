use std::path::PathBuf;

/// Failures of the harness, each mapped to a CLI exit code.
#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("spec error: {0}")]
    Spec(String),

    #[error(transparent)]
    Model(#[from] cfisac_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed {what}: {detail}")]
    Format { what: &'static str, detail: String },

    #[error("every optimizer instance of `{0}` was infeasible")]
    InfeasibleEverywhere(String),
}

impl HarnessError {
    pub fn spec(msg: impl Into<String>) -> Self {
        Self::Spec(msg.into())
    }

    pub fn format(what: &'static str, detail: impl ToString) -> Self {
        Self::Format { what, detail: detail.to_string() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    /// 2 when an optimizer experiment had no feasible instance, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::InfeasibleEverywhere(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
