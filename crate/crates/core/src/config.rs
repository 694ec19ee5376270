//! TOML configuration shared by the CLI commands and the server.
//!
//! Relative paths are resolved against the working directory given on the
//! command line. Only provider API keys come from the environment, and only
//! through the variable names configured here.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ingest::FilterPolicy;
use crate::mesh::DEFAULT_LOD_TRIANGLES;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Directory of detection files.
    pub corpus: PathBuf,
    /// Vocabulary file; the built-in urban vocabulary when absent.
    pub vocab: Option<PathBuf>,
    /// Matrix snapshot written by `build` and read by the other commands.
    pub matrix: PathBuf,
    /// Output directory of `run` and asset root of `serve`.
    pub out: PathBuf,
    pub filter: FilterPolicy,
    pub providers: ProviderConfig,
    pub recommend: RecommendConfig,
    pub mesh: MeshConfig,
    pub service: ServiceConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderConfig {
    /// `mock:<dir>` or an http(s) endpoint.
    pub vlm: String,
    pub mesh: String,
    pub vlm_api_key_env: String,
    pub mesh_api_key_env: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecommendConfig {
    /// Feasibility rules file; the built-in rules when absent.
    pub rules: Option<PathBuf>,
    pub max_retries: u32,
    /// Classes never offered as statistical complements.
    pub exclude: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshConfig {
    pub lod_triangles: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub bind: String,
    /// Mesh generation workers; 0 runs jobs inline.
    pub workers: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            corpus: "corpus".into(),
            vocab: None,
            matrix: "matrix.json".into(),
            out: "out".into(),
            filter: FilterPolicy::default(),
            providers: ProviderConfig::default(),
            recommend: RecommendConfig::default(),
            mesh: MeshConfig::default(),
            service: ServiceConfig::default(),
        }
    }
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            vlm: "mock:vlm".into(),
            mesh: "mock:meshes".into(),
            vlm_api_key_env: "URBANTACTIC_VLM_API_KEY".into(),
            mesh_api_key_env: "URBANTACTIC_MESH_API_KEY".into(),
        }
    }
}

impl Default for RecommendConfig {
    fn default() -> Self {
        RecommendConfig { rules: None, max_retries: 2, exclude: vec![crate::ingest::PERSON.into()] }
    }
}

impl Default for MeshConfig {
    fn default() -> Self {
        MeshConfig { lod_triangles: DEFAULT_LOD_TRIANGLES }
    }
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig { bind: "127.0.0.1:8080".into(), workers: 2 }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        let cfg: Config = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::from_toml(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn validate(&self) -> Result<(), String> {
        self.filter.validate()?;
        if self.mesh.lod_triangles == 0 {
            return Err("mesh.lod_triangles must be positive".into());
        }
        Ok(())
    }
}

/// Resolve `p` against `workdir` unless it is absolute.
pub fn resolve(workdir: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        workdir.join(p)
    }
}
