//! Vision-language provider contract and its offline implementations.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use parking_lot::Mutex;

use super::prompt::CropPair;
use crate::provider::{ProviderError, ProviderSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct VlmRequest {
    pub prompt: String,
    pub image_refs: Vec<String>,
    pub crops: Option<CropPair>,
    /// 0 for the first call, incremented on every retry.
    pub attempt: u32,
}

/// Returns the raw reply text.
pub trait VlmProvider: Send + Sync {
    fn complete(&self, request: &VlmRequest) -> Result<String, ProviderError>;
}

impl<T: VlmProvider + ?Sized> VlmProvider for Arc<T> {
    fn complete(&self, request: &VlmRequest) -> Result<String, ProviderError> {
        (**self).complete(request)
    }
}

/// Canned replies from a fixtures directory, keyed by the image file stem.
///
/// For attempt `n` and key `k` the first existing file among
/// `k.n.txt`, `k.txt`, `default.n.txt`, `default.txt` (or `.csv`) is served.
/// Pixels are never read.
#[derive(Debug, Clone)]
pub struct FixtureVlm {
    dir: PathBuf,
}

impl FixtureVlm {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        FixtureVlm { dir: dir.into() }
    }

    fn key(request: &VlmRequest) -> String {
        request
            .image_refs
            .first()
            .map(|r| Path::new(r).file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| r.clone()))
            .unwrap_or_else(|| "default".to_string())
    }
}

impl VlmProvider for FixtureVlm {
    fn complete(&self, request: &VlmRequest) -> Result<String, ProviderError> {
        let key = Self::key(request);
        let n = request.attempt;
        for stem in [format!("{key}.{n}"), key.clone(), format!("default.{n}"), "default".into()] {
            for ext in ["txt", "csv"] {
                let p = self.dir.join(format!("{stem}.{ext}"));
                if p.is_file() {
                    return std::fs::read_to_string(&p)
                        .map_err(|e| ProviderError::MissingFixture(format!("{}: {e}", p.display())));
                }
            }
        }
        Err(ProviderError::MissingFixture(format!("no reply for {key:?} in {}", self.dir.display())))
    }
}

/// Replies from a fixed script, one entry per call; the last entry repeats.
#[derive(Debug, Default)]
pub struct ScriptedVlm {
    script: Vec<Result<String, ProviderError>>,
    calls: Mutex<Vec<VlmRequest>>,
}

impl ScriptedVlm {
    pub fn new(script: Vec<Result<String, ProviderError>>) -> Self {
        assert!(!script.is_empty(), "script needs at least one reply");
        ScriptedVlm { script, calls: Mutex::new(Vec::new()) }
    }

    pub fn always(reply: impl Into<String>) -> Self {
        Self::new(vec![Ok(reply.into())])
    }

    pub fn calls(&self) -> Vec<VlmRequest> {
        self.calls.lock().clone()
    }
}

impl VlmProvider for ScriptedVlm {
    fn complete(&self, request: &VlmRequest) -> Result<String, ProviderError> {
        let mut calls = self.calls.lock();
        let i = calls.len().min(self.script.len() - 1);
        calls.push(request.clone());
        self.script[i].clone()
    }
}

#[cfg(feature = "live")]
mod http {
    use super::*;
    use std::time::Duration;

    /// POSTs `{"prompt", "images"}` as JSON; accepts a JSON reply with a
    /// `text` field or a plain-text body.
    pub struct HttpVlm {
        pub endpoint: String,
        pub api_key_env: String,
        pub timeout: Duration,
    }

    impl VlmProvider for HttpVlm {
        fn complete(&self, request: &VlmRequest) -> Result<String, ProviderError> {
            let key = crate::provider::api_key(&self.api_key_env)?;
            let client = reqwest::blocking::Client::builder()
                .timeout(self.timeout)
                .build()
                .map_err(|e| ProviderError::Transport(e.to_string()))?;
            let body = serde_json::json!({
                "prompt": request.prompt,
                "images": request.image_refs,
                "crops": request.crops,
            });
            let resp = client.post(&self.endpoint).bearer_auth(key).json(&body).send().map_err(|e| {
                if e.is_timeout() {
                    ProviderError::Timeout(self.timeout)
                } else {
                    ProviderError::Transport(e.to_string())
                }
            })?;
            let status = resp.status();
            if status == reqwest::StatusCode::UNAUTHORIZED || status == reqwest::StatusCode::FORBIDDEN {
                return Err(ProviderError::Auth(status.to_string()));
            }
            let text = resp.text().map_err(|e| ProviderError::Transport(e.to_string()))?;
            if !status.is_success() {
                return Err(ProviderError::Failed(format!("{status}: {text}")));
            }
            Ok(serde_json::from_str::<serde_json::Value>(&text)
                .ok()
                .and_then(|v| v.get("text").and_then(|t| t.as_str()).map(str::to_string))
                .unwrap_or(text))
        }
    }
}

#[cfg(feature = "live")]
pub use http::HttpVlm;

/// Instantiate the provider a locator names.
pub fn vlm_from_spec(spec: &ProviderSpec, api_key_env: &str) -> Result<Arc<dyn VlmProvider>, ProviderError> {
    match spec {
        ProviderSpec::Mock(dir) => Ok(Arc::new(FixtureVlm::new(dir))),
        #[cfg(feature = "live")]
        ProviderSpec::Http(url) => Ok(Arc::new(HttpVlm {
            endpoint: url.clone(),
            api_key_env: api_key_env.to_string(),
            timeout: std::time::Duration::from_secs(120),
        })),
        #[cfg(not(feature = "live"))]
        ProviderSpec::Http(url) => {
            let _ = api_key_env;
            Err(ProviderError::Unsupported(format!("{url} (built without the `live` feature)")))
        }
    }
}
