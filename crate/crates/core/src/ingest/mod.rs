//! Detection ingestion: scene records, label vocabulary and the activity filter.
//!
//! Detections come from any open-vocabulary detector (or from annotation
//! tools) serialized in the detection-file schema; nothing here touches pixels.

mod filter;
mod parse;
mod vocab;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use filter::{filter_scenes, FilterPolicy, ANY_CATEGORY};
pub use parse::{
    load_corpus_dir, parse_detection_file, scenes_to_json, Corpus, IngestError, ParseOptions, ParsedFile, UNKNOWN_LABEL,
};
pub use vocab::{canonicalize_label, VocabError, Vocabulary, PERSON};

/// Tolerance used when checking that a box stays inside the unit square.
const BBOX_EPS: f64 = 1e-9;

/// Normalized rectangle, origin top-left. Serialized as `[x, y, w, h]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl From<[f64; 4]> for BBox {
    fn from([x, y, w, h]: [f64; 4]) -> Self {
        BBox { x, y, w, h }
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        [b.x, b.y, b.w, b.h]
    }
}

impl BBox {
    pub fn validate(&self) -> Result<(), String> {
        let finite = [self.x, self.y, self.w, self.h].iter().all(|v| v.is_finite());
        if !finite {
            return Err("bbox has non-finite coordinates".into());
        }
        if self.w <= 0.0 {
            return Err(format!("bbox width must be > 0 (got {})", self.w));
        }
        if self.h <= 0.0 {
            return Err(format!("bbox height must be > 0 (got {})", self.h));
        }
        if self.x < 0.0 || self.y < 0.0 {
            return Err("bbox origin must be nonnegative".into());
        }
        if self.x + self.w > 1.0 + BBOX_EPS || self.y + self.h > 1.0 + BBOX_EPS {
            return Err("bbox extends past the unit square".into());
        }
        Ok(())
    }

    /// Bottom edge in normalized image coordinates.
    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub label: String,
    pub confidence: f64,
    pub bbox: BBox,
}

/// Feasibility context a scene offers. Supplied with the detection file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextTag {
    StreetEdge,
    Intersection,
    SidewalkGround,
    GrassGround,
    PlazaGround,
    WaterAdjacent,
    StairsPresent,
    VehicleTraffic,
}

impl ContextTag {
    pub const ALL: [ContextTag; 8] = [
        ContextTag::StreetEdge,
        ContextTag::Intersection,
        ContextTag::SidewalkGround,
        ContextTag::GrassGround,
        ContextTag::PlazaGround,
        ContextTag::WaterAdjacent,
        ContextTag::StairsPresent,
        ContextTag::VehicleTraffic,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ContextTag::StreetEdge => "street_edge",
            ContextTag::Intersection => "intersection",
            ContextTag::SidewalkGround => "sidewalk_ground",
            ContextTag::GrassGround => "grass_ground",
            ContextTag::PlazaGround => "plaza_ground",
            ContextTag::WaterAdjacent => "water_adjacent",
            ContextTag::StairsPresent => "stairs_present",
            ContextTag::VehicleTraffic => "vehicle_traffic",
        }
    }
}

impl fmt::Display for ContextTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ContextTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ContextTag::ALL.iter().copied().find(|t| t.as_str() == s).ok_or_else(|| format!("unknown context tag {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub scene_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_uri: Option<String>,
    pub scene_category: String,
    #[serde(default)]
    pub context_tags: BTreeSet<ContextTag>,
    pub detections: Vec<Detection>,
}

impl Scene {
    /// Distinct labels in first-seen order.
    pub fn classes(&self) -> Vec<&str> {
        let mut seen = Vec::new();
        for d in &self.detections {
            if !seen.contains(&d.label.as_str()) {
                seen.push(d.label.as_str());
            }
        }
        seen
    }

    pub fn contains_class(&self, class: &str) -> bool {
        self.detections.iter().any(|d| d.label == class)
    }

    /// Highest-confidence detection of `class`, first one on ties.
    pub fn best_detection(&self, class: &str) -> Option<&Detection> {
        self.detections.iter().filter(|d| d.label == class).fold(None, |best: Option<&Detection>, d| match best {
            Some(b) if b.confidence >= d.confidence => Some(b),
            _ => Some(d),
        })
    }

    pub fn has_tag(&self, tag: ContextTag) -> bool {
        self.context_tags.contains(&tag)
    }
}
