//! Minimal Wavefront OBJ reader/writer.
//!
//! Positions and faces are interpreted; `vt`/`vn` records are carried as raw
//! text and referenced by index so they survive a round trip untouched.
//! Polygons are fan-triangulated on read.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::MeshError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Corner {
    pub v: usize,
    pub vt: Option<usize>,
    pub vn: Option<usize>,
}

impl Corner {
    pub fn plain(v: usize) -> Self {
        Corner { v, vt: None, vn: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Aabb {
    pub fn extent(&self) -> [f64; 3] {
        [0, 1, 2].map(|k| self.max[k] - self.min[k])
    }

    pub fn height(&self) -> f64 {
        self.max[1] - self.min[1]
    }

    pub fn contains(&self, p: &[f64; 3], slack: f64) -> bool {
        (0..3).all(|k| p[k] >= self.min[k] - slack && p[k] <= self.max[k] + slack)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ObjMesh {
    pub positions: Vec<[f64; 3]>,
    /// Raw `vt` payloads (everything after the keyword).
    pub texcoords: Vec<String>,
    /// Raw `vn` payloads.
    pub normals: Vec<String>,
    pub triangles: Vec<[Corner; 3]>,
}

fn resolve(raw: &str, count: usize, what: &str, line: usize) -> Result<usize, MeshError> {
    let parse_err = || MeshError::Parse { line, message: format!("bad {what} index {raw:?}") };
    let i: i64 = raw.parse().map_err(|_| parse_err())?;
    let idx = if i > 0 {
        i - 1
    } else if i < 0 {
        count as i64 + i
    } else {
        return Err(parse_err());
    };
    if idx < 0 || idx as usize >= count {
        return Err(MeshError::Parse { line, message: format!("{what} index {raw} out of range ({count} defined)") });
    }
    Ok(idx as usize)
}

impl ObjMesh {
    pub fn parse(bytes: &[u8]) -> Result<Self, MeshError> {
        let text =
            std::str::from_utf8(bytes).map_err(|_| MeshError::Parse { line: 0, message: "not UTF-8 text".into() })?;
        let mut mesh = ObjMesh::default();
        for (n, raw_line) in text.lines().enumerate() {
            let line = n + 1;
            let content = raw_line.split('#').next().unwrap_or("").trim();
            let mut parts = content.split_whitespace();
            let Some(keyword) = parts.next() else { continue };
            match keyword {
                "v" => {
                    let coords: Vec<f64> = parts
                        .take(3)
                        .map(|p| p.parse::<f64>())
                        .collect::<Result<_, _>>()
                        .map_err(|e| MeshError::Parse { line, message: format!("bad vertex: {e}") })?;
                    if coords.len() != 3 || coords.iter().any(|c| !c.is_finite()) {
                        return Err(MeshError::Parse { line, message: "vertex needs 3 finite coordinates".into() });
                    }
                    mesh.positions.push([coords[0], coords[1], coords[2]]);
                }
                "vt" => mesh.texcoords.push(parts.collect::<Vec<_>>().join(" ")),
                "vn" => mesh.normals.push(parts.collect::<Vec<_>>().join(" ")),
                "f" => {
                    let mut corners = Vec::new();
                    for token in parts {
                        let mut it = token.split('/');
                        let v = resolve(it.next().unwrap_or(""), mesh.positions.len(), "vertex", line)?;
                        let vt = match it.next() {
                            Some("") | None => None,
                            Some(t) => Some(resolve(t, mesh.texcoords.len(), "texcoord", line)?),
                        };
                        let vn = match it.next() {
                            Some("") | None => None,
                            Some(t) => Some(resolve(t, mesh.normals.len(), "normal", line)?),
                        };
                        corners.push(Corner { v, vt, vn });
                    }
                    if corners.len() < 3 {
                        return Err(MeshError::Parse { line, message: "face needs at least 3 corners".into() });
                    }
                    for k in 1..corners.len() - 1 {
                        mesh.triangles.push([corners[0], corners[k], corners[k + 1]]);
                    }
                }
                // groups, materials, smoothing: not needed downstream
                _ => {}
            }
        }
        Ok(mesh)
    }

    pub fn to_obj_string(&self) -> String {
        let mut out = String::new();
        for p in &self.positions {
            writeln!(out, "v {} {} {}", p[0], p[1], p[2]).unwrap();
        }
        for t in &self.texcoords {
            writeln!(out, "vt {t}").unwrap();
        }
        for n in &self.normals {
            writeln!(out, "vn {n}").unwrap();
        }
        for tri in &self.triangles {
            out.push('f');
            for c in tri {
                match (c.vt, c.vn) {
                    (None, None) => write!(out, " {}", c.v + 1),
                    (Some(t), None) => write!(out, " {}/{}", c.v + 1, t + 1),
                    (None, Some(n)) => write!(out, " {}//{}", c.v + 1, n + 1),
                    (Some(t), Some(n)) => write!(out, " {}/{}/{}", c.v + 1, t + 1, n + 1),
                }
                .unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn aabb(&self) -> Option<Aabb> {
        let first = *self.positions.first()?;
        let mut b = Aabb { min: first, max: first };
        for p in &self.positions {
            b.min = [0, 1, 2].map(|k| b.min[k].min(p[k]));
            b.max = [0, 1, 2].map(|k| b.max[k].max(p[k]));
        }
        Some(b)
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_area(&self, tri: &[Corner; 3]) -> f64 {
        let [a, b, c] = tri.map(|c| self.positions[c.v]);
        let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
        let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
        let cross = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
        0.5 * (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt()
    }
}
