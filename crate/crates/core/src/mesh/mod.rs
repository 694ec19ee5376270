//! From accepted suggestion to a scene-ready mesh: brief, generation,
//! normalization to real-world height with a ground pivot, and a
//! low-detail copy for lightweight previews.

mod asset;
mod brief;
mod decimate;
mod normalize;
mod obj;
pub mod provider;
pub mod shapes;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::provider::ProviderError;
use crate::recommend::Suggestion;

pub use asset::{asset_dir, persist, produce_asset, read_lod, read_meta, AssetMeta, LodMeta, ProducedAsset};
pub use brief::{
    extract_height_m, make_brief, unit_to_meters, GenerationBrief, SizeTable, CM_M, FOOT_M, INCH_M, MAX_HEIGHT_M,
    MIN_HEIGHT_M, MM_M,
};
pub use decimate::{cluster, decimate, decimate_with_report, DecimationReport, Grid, MAX_RESOLUTION};
pub use normalize::{normalize, normalize_mesh};
pub use obj::{Aabb, Corner, ObjMesh};
pub use provider::{generate, Generated, MeshProvider};

/// Default triangle budget of the low LOD.
pub const DEFAULT_LOD_TRIANGLES: usize = 2000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("OBJ parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("mesh has no usable triangles")]
    EmptyMesh,
    #[error("mesh has zero height and cannot be scaled")]
    FlatMesh,
    #[error("unsupported mesh format {0:?}")]
    UnsupportedFormat(String),
    #[error("mesh generation failed: {0}")]
    GenerationFailed(String),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("suggestion {0:?} has no description")]
    MissingDescription(String),
    #[error("suggestion {0:?} is not accepted")]
    NotAccepted(String),
    #[error("invalid brief: {0}")]
    InvalidBrief(String),
    #[error("asset storage: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lod {
    Full,
    Low,
}

impl Lod {
    pub fn as_str(self) -> &'static str {
        match self {
            Lod::Full => "full",
            Lod::Low => "low",
        }
    }
}

impl fmt::Display for Lod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Lod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(Lod::Full),
            "low" => Ok(Lod::Low),
            other => Err(format!("unknown level of detail {other:?}")),
        }
    }
}

/// A triangle mesh in meters with its bounds cached.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshAsset {
    pub asset_id: String,
    pub source_suggestion: Option<Suggestion>,
    pub geometry: ObjMesh,
    pub aabb: Aabb,
    pub target_height_m: f64,
    pub lod: Lod,
    pub provider_job_ref: Option<String>,
}

impl MeshAsset {
    /// `geometry` must have at least one vertex.
    pub fn new(asset_id: String, geometry: ObjMesh, target_height_m: f64, lod: Lod) -> Self {
        let aabb = geometry.aabb().expect("asset geometry has vertices");
        MeshAsset { asset_id, source_suggestion: None, geometry, aabb, target_height_m, lod, provider_job_ref: None }
    }

    pub fn with_source(mut self, suggestion: Option<Suggestion>, job_ref: Option<String>) -> Self {
        self.source_suggestion = suggestion;
        self.provider_job_ref = job_ref;
        self
    }

    /// Indices in range, no zero-area triangles, bounds current.
    pub fn check_invariants(&self) -> Result<(), String> {
        let n = self.geometry.positions.len();
        for (i, t) in self.geometry.triangles.iter().enumerate() {
            if t.iter().any(|c| c.v >= n) {
                return Err(format!("triangle {i} references a missing vertex"));
            }
            if self.geometry.triangle_area(t) <= 0.0 {
                return Err(format!("triangle {i} has zero area"));
            }
        }
        if self.geometry.aabb() != Some(self.aabb) {
            return Err("stored bounds differ from geometry".into());
        }
        Ok(())
    }
}
