//! Shared plumbing for the external generative providers (vision-language
//! and text-to-3D).
//!
//! A provider is selected by a locator string: `mock:<dir>` serves canned
//! fixtures from a directory, anything starting with `http://` or
//! `https://` talks to a live endpoint (requires the `live` feature).

use std::path::PathBuf;
use std::time::Duration;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProviderError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("provider timed out after {0:?}")]
    Timeout(Duration),
    #[error("provider reported failure: {0}")]
    Failed(String),
    #[error("mock fixture not found: {0}")]
    MissingFixture(String),
    #[error("unsupported provider locator {0:?}")]
    Unsupported(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProviderSpec {
    Mock(PathBuf),
    Http(String),
}

impl ProviderSpec {
    pub fn parse(locator: &str) -> Result<Self, ProviderError> {
        if let Some(dir) = locator.strip_prefix("mock:") {
            Ok(ProviderSpec::Mock(PathBuf::from(dir)))
        } else if locator.starts_with("http://") || locator.starts_with("https://") {
            Ok(ProviderSpec::Http(locator.to_string()))
        } else {
            Err(ProviderError::Unsupported(locator.to_string()))
        }
    }

    /// Resolve a relative mock directory against `base`.
    pub fn rooted(self, base: &std::path::Path) -> Self {
        match self {
            ProviderSpec::Mock(p) if p.is_relative() => ProviderSpec::Mock(base.join(p)),
            other => other,
        }
    }
}

/// Lowercase, alphanumeric runs joined by `-`. Used for fixture file names.
pub fn slug(text: &str) -> String {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join("-")
}

#[cfg(feature = "live")]
pub(crate) fn api_key(var: &str) -> Result<String, ProviderError> {
    std::env::var(var).map_err(|_| ProviderError::Auth(format!("environment variable {var} is not set")))
}
