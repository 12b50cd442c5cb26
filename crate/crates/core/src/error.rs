use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error("training diverged at layer {layer}: {message}")]
    Training { layer: usize, message: String },

    #[error("input: {0}")]
    Input(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("schema: {0}")]
    Schema(String),

    #[error("config: {0}")]
    Config(String),

    #[error("sampling: {0}")]
    Sampling(String),

    #[error("protocol: {0}")]
    Protocol(String),

    #[error("metric: {0}")]
    Metric(String),

    #[error("export: {0}")]
    Export(String),

    #[error("unknown sample `{0}`")]
    UnknownSample(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable, machine-parsable category name used by the CLI on failure.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Shape(_) => "shape",
            Error::Usage(_) => "usage",
            Error::Training { .. } => "training",
            Error::Input(_) => "input",
            Error::Parse { .. } => "parse",
            Error::Schema(_) => "schema",
            Error::Config(_) => "config",
            Error::Sampling(_) => "sampling",
            Error::Protocol(_) => "protocol",
            Error::Metric(_) => "metric",
            Error::Export(_) => "export",
            Error::UnknownSample(_) => "key",
            Error::Io { .. } => "io",
        }
    }

    /// The display text without a leading `category: ` tag, for callers that
    /// print the category themselves.
    pub fn message(&self) -> String {
        let text = self.to_string();
        match text.strip_prefix(self.category()).and_then(|t| t.strip_prefix(": ")) {
            Some(rest) => rest.to_string(),
            None => text,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// Non-finite loss without an attributable layer.
    pub(crate) fn diverged(message: impl Into<String>) -> Self {
        Error::Training {
            layer: 0,
            message: message.into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn message_drops_the_category_tag() {
        assert_eq!(Error::Config("bad k".into()).message(), "bad k");
        assert_eq!(Error::UnknownSample("u1".into()).message(), "unknown sample `u1`");
        assert_eq!(Error::Config("x".into()).category(), "config");
    }
}
