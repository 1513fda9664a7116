use std::path::{Path, PathBuf};

/// Failures of the file layer and the command line.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("format error: {0}")]
    Format(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("load error: {0}")]
    Load(String),
    #[error(transparent)]
    Core(#[from] vgan_core::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Error {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Process exit code: 1 usage, 2 data or validation, 3 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            Error::Core(e) if e.is_numeric() => 3,
            _ => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            1 => "usage",
            3 => "numeric",
            _ => "data",
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Error {
        let line = e.position().map_or(0, |p| p.line() as usize);
        Error::Parse { line, msg: e.to_string() }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Error {
        Error::Parse {
            line: e.line(),
            msg: e.to_string(),
        }
    }
}
