use std::path::PathBuf;

use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}", config_message(.line, .field, .message))]
    Config {
        line: Option<usize>,
        field: Option<String>,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Model(#[from] mecpart::Error),
    #[error("{0}")]
    Usage(String),
}

fn config_message(line: &Option<usize>, field: &Option<String>, message: &str) -> String {
    match (line, field) {
        (Some(l), Some(f)) => format!("line {l}, `{f}`: {message}"),
        (Some(l), None) => format!("line {l}: {message}"),
        (None, Some(f)) => format!("`{f}`: {message}"),
        (None, None) => message.to_string(),
    }
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config { .. } => "config",
            CliError::Io { .. } => "io",
            CliError::Model(_) => "model",
            CliError::Usage(_) => "usage",
        }
    }

    /// Single-line JSON for stderr.
    pub fn to_json_line(&self) -> String {
        let mut value = json!({ "error": self.kind(), "message": self.to_string() });
        if let CliError::Config { line, field, .. } = self {
            value["line"] = json!(line);
            value["field"] = json!(field);
        }
        value.to_string()
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_line_carries_location() {
        let e = CliError::Config {
            line: Some(4),
            field: Some("seed".into()),
            message: "bad".into(),
        };
        let v: serde_json::Value = serde_json::from_str(&e.to_json_line()).unwrap();
        assert_eq!(v["error"], "config");
        assert_eq!(v["line"], 4);
        assert_eq!(v["field"], "seed");
        assert!(!e.to_json_line().contains('\n'));
    }
}
