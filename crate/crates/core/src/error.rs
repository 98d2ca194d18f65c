use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameters or inconsistent configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Malformed corpus, vocabulary, matrix or model input.
    #[error("input error: {message}")]
    Input { message: String },

    /// Input text is not valid UTF-8.
    #[error("input error: invalid UTF-8 at byte offset {offset}")]
    Encoding { offset: usize },

    /// A value underflowed or went non-finite during optimization.
    #[error("numerical collapse{}: {message}", .iteration.map(|i| format!(" at iteration {i}")).unwrap_or_default())]
    Collapse {
        message: String,
        iteration: Option<usize>,
    },

    /// Query word not present in the vocabulary.
    #[error("unknown word {word:?}{}", suggestion_suffix(.suggestions))]
    UnknownWord { word: String, suggestions: Vec<String> },

    /// Word is in the vocabulary but was pruned before training.
    #[error("no embedding for {0:?}: word had no co-occurrence mass and was pruned")]
    NoEmbedding(String),

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn suggestion_suffix(suggestions: &[String]) -> String {
    if suggestions.is_empty() {
        String::new()
    } else {
        format!(" (did you mean: {})", suggestions.join(", "))
    }
}

impl Error {
    pub(crate) fn input(message: impl Into<String>) -> Self {
        Error::Input {
            message: message.into(),
        }
    }

    pub(crate) fn collapse(message: impl Into<String>) -> Self {
        Error::Collapse {
            message: message.into(),
            iteration: None,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Input { .. } | Error::Encoding { .. } | Error::Io { .. } => 3,
            Error::Collapse { .. } => 4,
            Error::UnknownWord { .. } | Error::NoEmbedding(_) => 5,
        }
    }
}
