use super::obj::{Corner, ObjMesh};
use super::{Lod, MeshAsset, MeshError};

/// Triangles below this area (relative to the squared target height) count as degenerate.
const AREA_EPS: f64 = 1e-14;

fn index_degenerate(t: &[Corner; 3]) -> bool {
    t[0].v == t[1].v || t[1].v == t[2].v || t[0].v == t[2].v
}

/// Scale uniformly to `target_height_m`, rest the bounding box on y = 0 and
/// center it horizontally on x = z = 0. Degenerate triangles are dropped;
/// everything else (winding, attributes, vertex order) is kept.
pub fn normalize_mesh(mut mesh: ObjMesh, target_height_m: f64) -> Result<ObjMesh, MeshError> {
    if !(target_height_m.is_finite() && target_height_m > 0.0) {
        return Err(MeshError::InvalidBrief(format!("target height {target_height_m} must be positive")));
    }
    mesh.triangles.retain(|t| !index_degenerate(t));
    if mesh.triangles.is_empty() {
        return Err(MeshError::EmptyMesh);
    }
    let b = mesh.aabb().ok_or(MeshError::EmptyMesh)?;
    let height = b.height();
    if height <= 0.0 || !height.is_finite() {
        return Err(MeshError::FlatMesh);
    }
    let s = target_height_m / height;
    let cx = 0.5 * (b.min[0] + b.max[0]);
    let cz = 0.5 * (b.min[2] + b.max[2]);
    for p in &mut mesh.positions {
        *p = [(p[0] - cx) * s, (p[1] - b.min[1]) * s, (p[2] - cz) * s];
    }
    let eps = AREA_EPS * target_height_m * target_height_m;
    let kept: Vec<_> = mesh.triangles.iter().filter(|t| mesh.triangle_area(t) > eps).copied().collect();
    if kept.is_empty() {
        return Err(MeshError::EmptyMesh);
    }
    mesh.triangles = kept;
    Ok(mesh)
}

/// Parse OBJ bytes and normalize them into a full-detail asset.
///
/// The returned asset has an empty id and no source suggestion; the caller
/// fills those in.
pub fn normalize(raw: &[u8], target_height_m: f64) -> Result<MeshAsset, MeshError> {
    let mesh = ObjMesh::parse(raw)?;
    let geometry = normalize_mesh(mesh, target_height_m)?;
    Ok(MeshAsset::new(String::new(), geometry, target_height_m, Lod::Full))
}
