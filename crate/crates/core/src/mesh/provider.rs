//! Text-to-3D provider contract.

use std::path::PathBuf;
use std::sync::Arc;

use parking_lot::Mutex;

use super::brief::GenerationBrief;
use super::MeshError;
use crate::provider::{slug, ProviderError, ProviderSpec};

pub const OBJ_FORMAT: &str = "obj";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeshRequest {
    pub title: String,
    pub text: String,
    pub attempt: u32,
}

impl MeshRequest {
    pub fn from_brief(brief: &GenerationBrief, attempt: u32) -> Self {
        MeshRequest { title: brief.title.clone(), text: brief.to_text(), attempt }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeshResponse {
    pub bytes: Vec<u8>,
    pub format: String,
    pub job_ref: Option<String>,
}

pub trait MeshProvider: Send + Sync {
    fn generate(&self, request: &MeshRequest) -> Result<MeshResponse, ProviderError>;
}

impl<T: MeshProvider + ?Sized> MeshProvider for Arc<T> {
    fn generate(&self, request: &MeshRequest) -> Result<MeshResponse, ProviderError> {
        (**self).generate(request)
    }
}

/// Canned OBJ files keyed by the slug of the brief title.
///
/// Lookup order for attempt `n`: `<slug>.n.obj`, `<slug>.obj`,
/// `default.n.obj`, `default.obj`.
#[derive(Debug, Clone)]
pub struct FixtureMesh {
    dir: PathBuf,
}

impl FixtureMesh {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        FixtureMesh { dir: dir.into() }
    }
}

impl MeshProvider for FixtureMesh {
    fn generate(&self, request: &MeshRequest) -> Result<MeshResponse, ProviderError> {
        let key = slug(&request.title);
        let n = request.attempt;
        for stem in [format!("{key}.{n}"), key.clone(), format!("default.{n}"), "default".into()] {
            let p = self.dir.join(format!("{stem}.obj"));
            if p.is_file() {
                let bytes =
                    std::fs::read(&p).map_err(|e| ProviderError::MissingFixture(format!("{}: {e}", p.display())))?;
                return Ok(MeshResponse { bytes, format: OBJ_FORMAT.into(), job_ref: Some(format!("mock:{stem}")) });
            }
        }
        Err(ProviderError::MissingFixture(format!("no mesh for {key:?} in {}", self.dir.display())))
    }
}

/// Responses from a fixed script; the last entry repeats.
#[derive(Debug)]
pub struct ScriptedMesh {
    script: Vec<Result<MeshResponse, ProviderError>>,
    calls: Mutex<Vec<MeshRequest>>,
}

impl ScriptedMesh {
    pub fn new(script: Vec<Result<MeshResponse, ProviderError>>) -> Self {
        assert!(!script.is_empty(), "script needs at least one response");
        ScriptedMesh { script, calls: Mutex::new(Vec::new()) }
    }

    pub fn obj(text: &str) -> Result<MeshResponse, ProviderError> {
        Ok(MeshResponse { bytes: text.as_bytes().to_vec(), format: OBJ_FORMAT.into(), job_ref: None })
    }

    pub fn calls(&self) -> Vec<MeshRequest> {
        self.calls.lock().clone()
    }
}

impl MeshProvider for ScriptedMesh {
    fn generate(&self, request: &MeshRequest) -> Result<MeshResponse, ProviderError> {
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

    /// POSTs the brief text; the reply body is the mesh and the
    /// `x-mesh-format` header (default `obj`) its format.
    pub struct HttpMesh {
        pub endpoint: String,
        pub api_key_env: String,
        pub timeout: Duration,
    }

    impl MeshProvider for HttpMesh {
        fn generate(&self, request: &MeshRequest) -> Result<MeshResponse, ProviderError> {
            let key = crate::provider::api_key(&self.api_key_env)?;
            let client = reqwest::blocking::Client::builder()
                .timeout(self.timeout)
                .build()
                .map_err(|e| ProviderError::Transport(e.to_string()))?;
            let resp = client
                .post(&self.endpoint)
                .bearer_auth(key)
                .header("content-type", "text/plain; charset=utf-8")
                .body(request.text.clone())
                .send()
                .map_err(|e| {
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
            let header = |name: &str| resp.headers().get(name).and_then(|v| v.to_str().ok()).map(str::to_string);
            let format = header("x-mesh-format").unwrap_or_else(|| OBJ_FORMAT.into());
            let job_ref = header("x-job-id");
            let bytes = resp.bytes().map_err(|e| ProviderError::Transport(e.to_string()))?;
            if !status.is_success() {
                return Err(ProviderError::Failed(format!("{status}: {}", String::from_utf8_lossy(&bytes))));
            }
            Ok(MeshResponse { bytes: bytes.to_vec(), format, job_ref })
        }
    }
}

#[cfg(feature = "live")]
pub use http::HttpMesh;

pub fn mesh_from_spec(spec: &ProviderSpec, api_key_env: &str) -> Result<Arc<dyn MeshProvider>, ProviderError> {
    match spec {
        ProviderSpec::Mock(dir) => Ok(Arc::new(FixtureMesh::new(dir))),
        #[cfg(feature = "live")]
        ProviderSpec::Http(url) => Ok(Arc::new(HttpMesh {
            endpoint: url.clone(),
            api_key_env: api_key_env.to_string(),
            timeout: std::time::Duration::from_secs(600),
        })),
        #[cfg(not(feature = "live"))]
        ProviderSpec::Http(url) => {
            let _ = api_key_env;
            Err(ProviderError::Unsupported(format!("{url} (built without the `live` feature)")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub bytes: Vec<u8>,
    pub format: String,
    pub job_ref: Option<String>,
    pub retries: u32,
}

/// Request a mesh; a failed or empty first attempt is retried once with the
/// tightened brief.
pub fn generate(brief: &GenerationBrief, provider: &dyn MeshProvider) -> Result<Generated, MeshError> {
    brief.validate()?;
    let mut last_err = None;
    for attempt in 0..2u32 {
        let b = if attempt == 0 { brief.clone() } else { brief.tightened() };
        match provider.generate(&MeshRequest::from_brief(&b, attempt)) {
            Ok(resp) if !resp.format.eq_ignore_ascii_case(OBJ_FORMAT) => {
                return Err(MeshError::UnsupportedFormat(resp.format));
            }
            Ok(resp) if resp.bytes.iter().all(u8::is_ascii_whitespace) => {
                last_err = Some(MeshError::GenerationFailed(format!(
                    "empty mesh for {:?} on attempt {}",
                    brief.title,
                    attempt + 1
                )));
            }
            Ok(resp) => {
                return Ok(Generated {
                    bytes: resp.bytes,
                    format: resp.format,
                    job_ref: resp.job_ref,
                    retries: attempt,
                });
            }
            Err(e) => {
                log::warn!("mesh provider failed for {:?} (attempt {}): {e}", brief.title, attempt + 1);
                last_err = Some(MeshError::Provider(e));
            }
        }
    }
    Err(last_err.expect("two attempts ran"))
}
