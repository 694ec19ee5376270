//! Uniform-grid vertex clustering.

use std::collections::{HashMap, HashSet};

use super::obj::{Aabb, Corner, ObjMesh};
use super::{Lod, MeshAsset};

/// Finest grid resolution tried (cells along the longest axis).
pub const MAX_RESOLUTION: u32 = 1024;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub origin: [f64; 3],
    pub cell: f64,
    pub dims: [usize; 3],
}

impl Grid {
    /// Cubic cells, `resolution` of them along the longest box axis.
    pub fn for_resolution(aabb: &Aabb, resolution: u32) -> Grid {
        let ext = aabb.extent();
        let longest = ext.iter().cloned().fold(0.0, f64::max);
        let cell = if longest > 0.0 { longest / resolution.max(1) as f64 } else { 1.0 };
        let dims = ext.map(|e| ((e / cell).ceil() as usize).max(1));
        Grid { origin: aabb.min, cell, dims }
    }

    pub fn cell_of(&self, p: &[f64; 3]) -> [usize; 3] {
        [0, 1, 2].map(|k| {
            let i = ((p[k] - self.origin[k]) / self.cell).floor();
            if i <= 0.0 {
                0
            } else {
                (i as usize).min(self.dims[k] - 1)
            }
        })
    }
}

/// Collapse every grid cell to the mean of its vertices.
///
/// Triangles that lose a corner, repeat another triangle, or end up with
/// zero area are dropped; unreferenced clusters are removed. Texture
/// coordinates and normals do not survive clustering.
pub fn cluster(mesh: &ObjMesh, grid: &Grid) -> ObjMesh {
    let mut cell_ids: HashMap<[usize; 3], usize> = HashMap::new();
    let mut sums: Vec<([f64; 3], usize)> = Vec::new();
    let mut vertex_cluster = Vec::with_capacity(mesh.positions.len());
    for p in &mesh.positions {
        let next = sums.len();
        let id = *cell_ids.entry(grid.cell_of(p)).or_insert(next);
        if id == next {
            sums.push(([0.0; 3], 0));
        }
        let (s, n) = &mut sums[id];
        for k in 0..3 {
            s[k] += p[k];
        }
        *n += 1;
        vertex_cluster.push(id);
    }
    let reps: Vec<[f64; 3]> = sums.iter().map(|(s, n)| s.map(|c| c / *n as f64)).collect();
    let staged = ObjMesh { positions: reps, ..Default::default() };

    let mut seen = HashSet::new();
    let mut triangles = Vec::new();
    for t in &mesh.triangles {
        let ids = t.map(|c| vertex_cluster[c.v]);
        if ids[0] == ids[1] || ids[1] == ids[2] || ids[0] == ids[2] {
            continue;
        }
        let mut key = ids;
        key.sort_unstable();
        if !seen.insert(key) {
            continue;
        }
        let tri = ids.map(Corner::plain);
        if staged.triangle_area(&tri) > 0.0 {
            triangles.push(tri);
        }
    }

    let mut used = vec![false; staged.positions.len()];
    for t in &triangles {
        for c in t {
            used[c.v] = true;
        }
    }
    let mut remap = vec![usize::MAX; staged.positions.len()];
    let mut positions = Vec::new();
    for (old, p) in staged.positions.iter().enumerate() {
        if used[old] {
            remap[old] = positions.len();
            positions.push(*p);
        }
    }
    for t in &mut triangles {
        for c in t.iter_mut() {
            c.v = remap[c.v];
        }
    }
    ObjMesh { positions, texcoords: Vec::new(), normals: Vec::new(), triangles }
}

/// Put the box back on y = 0 with the given height and recenter x/z.
///
/// Only the vertical axis is rescaled, so the horizontal footprint stays
/// inside the clustered hull.
fn refit(mesh: &mut ObjMesh, target_height_m: f64) {
    let Some(b) = mesh.aabb() else { return };
    let h = b.height();
    let sy = if h > 0.0 { target_height_m / h } else { 1.0 };
    let cx = 0.5 * (b.min[0] + b.max[0]);
    let cz = 0.5 * (b.min[2] + b.max[2]);
    for p in &mut mesh.positions {
        *p = [p[0] - cx, (p[1] - b.min[1]) * sy, p[2] - cz];
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecimationReport {
    pub resolution: Option<u32>,
    pub triangles_before: usize,
    pub triangles_after: usize,
}

/// Low-detail copy of `asset` with at most `max(target, input)` triangles.
///
/// When no grid resolution keeps any triangle the input is returned unchanged.
pub fn decimate_with_report(asset: &MeshAsset, target_triangles: usize) -> (MeshAsset, DecimationReport) {
    let before = asset.geometry.triangle_count();
    if before <= target_triangles {
        let mut low = asset.clone();
        low.lod = Lod::Low;
        return (low, DecimationReport { resolution: None, triangles_before: before, triangles_after: before });
    }
    let at = |r: u32| cluster(&asset.geometry, &Grid::for_resolution(&asset.aabb, r));

    // Largest resolution whose output fits the budget; counts grow with r
    // almost monotonically, so bisect and then confirm.
    let (mut lo, mut hi) = (1u32, MAX_RESOLUTION);
    let mut best = at(lo);
    let top = at(hi);
    let (r, mut geometry) = if top.triangle_count() <= target_triangles {
        (hi, top)
    } else {
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            let m = at(mid);
            if m.triangle_count() <= target_triangles {
                lo = mid;
                best = m;
            } else {
                hi = mid;
            }
        }
        if best.triangle_count() == 0 {
            // budget too small for any closed shape: take the coarsest non-empty result
            (hi, at(hi))
        } else {
            (lo, best)
        }
    };
    if geometry.triangle_count() == 0 {
        // features smaller than the finest cell: nothing survives clustering
        let mut low = asset.clone();
        low.lod = Lod::Low;
        return (low, DecimationReport { resolution: None, triangles_before: before, triangles_after: before });
    }
    refit(&mut geometry, asset.target_height_m);
    let after = geometry.triangle_count();
    let low = MeshAsset::new(asset.asset_id.clone(), geometry, asset.target_height_m, Lod::Low)
        .with_source(asset.source_suggestion.clone(), asset.provider_job_ref.clone());
    (low, DecimationReport { resolution: Some(r), triangles_before: before, triangles_after: after })
}

pub fn decimate(asset: &MeshAsset, target_triangles: usize) -> MeshAsset {
    decimate_with_report(asset, target_triangles).0
}
