use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::brief::{make_brief, SizeTable};
use super::decimate::decimate;
use super::normalize::normalize;
use super::obj::Aabb;
use super::provider::{generate, MeshProvider};
use super::{Lod, MeshAsset, MeshError};
use crate::recommend::Suggestion;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LodMeta {
    pub vertices: usize,
    pub triangles: usize,
    pub aabb: Aabb,
}

impl LodMeta {
    fn of(a: &MeshAsset) -> Self {
        LodMeta { vertices: a.geometry.positions.len(), triangles: a.geometry.triangle_count(), aabb: a.aabb }
    }
}

/// Contents of `meta.json` beside the two OBJ files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetMeta {
    pub asset_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_suggestion: Option<Suggestion>,
    pub target_height_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provider_job_ref: Option<String>,
    pub retries: u32,
    pub full: LodMeta,
    pub low: LodMeta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProducedAsset {
    pub full: MeshAsset,
    pub low: MeshAsset,
    pub retries: u32,
}

impl ProducedAsset {
    pub fn meta(&self) -> AssetMeta {
        AssetMeta {
            asset_id: self.full.asset_id.clone(),
            source_suggestion: self.full.source_suggestion.clone(),
            target_height_m: self.full.target_height_m,
            provider_job_ref: self.full.provider_job_ref.clone(),
            retries: self.retries,
            full: LodMeta::of(&self.full),
            low: LodMeta::of(&self.low),
        }
    }
}

/// Brief, generate, normalize and decimate one accepted suggestion.
pub fn produce_asset(
    asset_id: &str,
    suggestion: &Suggestion,
    sizes: &SizeTable,
    provider: &dyn MeshProvider,
    lod_target: usize,
) -> Result<ProducedAsset, MeshError> {
    let brief = make_brief(suggestion, sizes)?;
    let generated = generate(&brief, provider)?;
    let full = normalize(&generated.bytes, brief.target_height_m)?;
    let full =
        MeshAsset { asset_id: asset_id.to_string(), ..full }.with_source(Some(suggestion.clone()), generated.job_ref);
    let low = decimate(&full, lod_target);
    Ok(ProducedAsset { full, low, retries: generated.retries })
}

pub fn asset_dir(root: &Path, asset_id: &str) -> PathBuf {
    root.join(asset_id)
}

/// Write `<root>/<asset_id>/{full.obj, low.obj, meta.json}`.
pub fn persist(root: &Path, asset: &ProducedAsset) -> Result<AssetMeta, MeshError> {
    let dir = asset_dir(root, &asset.full.asset_id);
    let io = |e: std::io::Error| MeshError::Io(format!("{}: {e}", dir.display()));
    std::fs::create_dir_all(&dir).map_err(io)?;
    std::fs::write(dir.join("full.obj"), asset.full.geometry.to_obj_string()).map_err(io)?;
    std::fs::write(dir.join("low.obj"), asset.low.geometry.to_obj_string()).map_err(io)?;
    let meta = asset.meta();
    let json = serde_json::to_string_pretty(&meta).expect("meta serializes");
    std::fs::write(dir.join("meta.json"), json + "\n").map_err(io)?;
    Ok(meta)
}

pub fn read_lod(root: &Path, asset_id: &str, lod: Lod) -> Result<String, MeshError> {
    let p = asset_dir(root, asset_id).join(format!("{}.obj", lod.as_str()));
    std::fs::read_to_string(&p).map_err(|e| MeshError::Io(format!("{}: {e}", p.display())))
}

pub fn read_meta(root: &Path, asset_id: &str) -> Result<AssetMeta, MeshError> {
    let p = asset_dir(root, asset_id).join("meta.json");
    let text = std::fs::read_to_string(&p).map_err(|e| MeshError::Io(format!("{}: {e}", p.display())))?;
    serde_json::from_str(&text).map_err(|e| MeshError::Io(format!("{}: {e}", p.display())))
}
