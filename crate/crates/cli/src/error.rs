use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Parse(String),
    #[error("{}{key}: {reason}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Invalid { key: String, reason: String, line: Option<usize> },
}

impl ConfigError {
    /// `key` is either a bare key or `section.key`.
    pub fn invalid(key: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Invalid { key: key.into(), reason: reason.into(), line: None }
    }

    /// Attaches the 1-based line where the offending key is set, if it is.
    pub fn locate(self, source: &str) -> Self {
        match self {
            ConfigError::Invalid { key, reason, line: None } => {
                let line = find_key_line(source, &key);
                ConfigError::Invalid { key, reason, line }
            }
            other => other,
        }
    }
}

impl From<vibfilter::Error> for ConfigError {
    fn from(e: vibfilter::Error) -> Self {
        match e {
            vibfilter::Error::InvalidParameter { name, reason } => ConfigError::invalid(name, reason),
            other => ConfigError::invalid("config", other.to_string()),
        }
    }
}

fn find_key_line(source: &str, key: &str) -> Option<usize> {
    let (section, key) = match key.split_once('.') {
        Some((s, k)) => (Some(s), k),
        None => (None, key),
    };
    let mut current = "";
    for (n, raw) in source.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim();
            continue;
        }
        let Some((k, _)) = line.split_once('=') else { continue };
        if k.trim() == key && section.is_none_or(|s| s == current) {
            return Some(n + 1);
        }
    }
    None
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] vibfilter::Error),
    #[error("cannot write {}: {source}", path.display())]
    Write { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Model(_) | CliError::Write { .. } => 2,
        }
    }
}
