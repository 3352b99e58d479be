use std::path::{Path, PathBuf};

use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("file not found: {}", .0.display())]
    MissingFile(PathBuf),
    #[error("cannot access {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error("unknown plot kind '{0}' (expected costs-bar, polytope or tracking)")]
    UnknownKind(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("stage '{stage}' failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<CliError>,
    },
    #[error(transparent)]
    Core(#[from] modasm_core::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        if source.kind() == std::io::ErrorKind::NotFound {
            CliError::MissingFile(path.to_path_buf())
        } else {
            CliError::Io { path: path.to_path_buf(), source }
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::MissingFile(_) => "MissingFile",
            CliError::Io { .. } => "Io",
            CliError::Parse { .. } => "Parse",
            CliError::UnknownKind(_) => "UnknownKind",
            CliError::Invalid(_) => "InvalidInput",
            CliError::Stage { source, .. } => source.kind(),
            CliError::Core(_) => "CoreError",
        }
    }

    fn path(&self) -> Option<&Path> {
        match self {
            CliError::MissingFile(p) | CliError::Io { path: p, .. } | CliError::Parse { path: p, .. } => Some(p),
            CliError::Stage { source, .. } => source.path(),
            _ => None,
        }
    }

    /// 2 for a missing input file, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::MissingFile(_) => 2,
            CliError::Stage { source, .. } => source.exit_code(),
            _ => 1,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = json!({ "error": self.kind(), "message": self.to_string() });
        if let Some(p) = self.path() {
            v["path"] = json!(p.display().to_string());
        }
        if let CliError::Stage { stage, .. } = self {
            v["stage"] = json!(stage);
        }
        v
    }
}
