use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate box: width {width}, height {height}")]
    DegenerateBox { width: f64, height: f64 },

    #[error("numerical failure: {0}")]
    Numerical(&'static str),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("missing required key `{0}`")]
    MissingKey(String),

    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("frame {got} presented after frame {last}; frames must strictly increase")]
    FrameOrder { last: u32, got: u32 },

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("{path}: {inner}")]
    InFile { path: String, inner: Box<Error> },
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    /// Attaches the file the error came from.
    pub fn in_file(self, path: impl AsRef<std::path::Path>) -> Self {
        Error::InFile {
            path: path.as_ref().display().to_string(),
            inner: Box::new(self),
        }
    }
}
