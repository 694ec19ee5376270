use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use image::RgbImage;
use serde::{Deserialize, Serialize};

use super::palette::{extract_palette, Rgb, PALETTE_SIZE};
use super::RecommendError;
use crate::ingest::{Scene, PERSON};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthBand {
    Near,
    Mid,
    Far,
}

impl DepthBand {
    /// Bucket by the box's bottom edge: lower third of the frame is near.
    pub fn from_bottom(bottom: f64) -> Self {
        if bottom >= 2.0 / 3.0 {
            DepthBand::Near
        } else if bottom >= 1.0 / 3.0 {
            DepthBand::Mid
        } else {
            DepthBand::Far
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            DepthBand::Near => "near",
            DepthBand::Mid => "mid",
            DepthBand::Far => "far",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSummary {
    pub scene_type: String,
    pub palette: [Rgb; PALETTE_SIZE],
    pub materials: Vec<String>,
    pub depth_bands: BTreeMap<DepthBand, Vec<String>>,
}

impl SceneSummary {
    pub fn band_of(&self, class: &str) -> Vec<DepthBand> {
        self.depth_bands.iter().filter(|(_, v)| v.iter().any(|c| c == class)).map(|(b, _)| *b).collect()
    }

    /// Plain-text block appended to the prompt.
    pub fn render(&self) -> String {
        let palette: Vec<String> = self.palette.iter().map(|[r, g, b]| format!("#{r:02x}{g:02x}{b:02x}")).collect();
        let depth: Vec<String> = self
            .depth_bands
            .iter()
            .map(|(band, classes)| {
                let list = if classes.is_empty() { "-".to_string() } else { classes.join(", ") };
                format!("{}: {}", band.as_str(), list)
            })
            .collect();
        let materials = if self.materials.is_empty() { "-".to_string() } else { self.materials.join(", ") };
        format!(
            "Scene type: {}\nColor palette: {}\nDominant materials: {}\nDepth sketch: {}",
            self.scene_type,
            palette.join(", "),
            materials,
            depth.join("; ")
        )
    }
}

/// Static class to material lookup.
pub fn materials_for(class: &str) -> &'static [&'static str] {
    match class {
        "bench" => &["wood", "metal"],
        "tree" => &["foliage", "bark"],
        "planter" => &["concrete", "soil"],
        "sign" => &["metal", "painted aluminum"],
        "sidewalk" => &["concrete", "paving stone"],
        "curb" => &["concrete", "granite"],
        "crosswalk" => &["asphalt", "road paint"],
        "fence" => &["metal"],
        "pole" => &["steel"],
        "traffic light" => &["steel", "glass"],
        "lamp" => &["steel", "glass"],
        "trash can" => &["metal", "plastic"],
        "bicycle" => &["steel", "rubber"],
        "balcony" => &["concrete", "metal"],
        "railing" => &["metal"],
        "stairs" => &["stone", "concrete"],
        "door" => &["wood", "glass"],
        "window" => &["glass"],
        _ => &[],
    }
}

pub fn decode_image(bytes: &[u8]) -> Result<RgbImage, RecommendError> {
    image::load_from_memory(bytes).map(|i| i.to_rgb8()).map_err(|e| RecommendError::ImageDecode(e.to_string()))
}

pub fn load_image(path: &Path) -> Result<RgbImage, RecommendError> {
    let bytes = std::fs::read(path).map_err(|e| RecommendError::ImageDecode(format!("{}: {e}", path.display())))?;
    decode_image(&bytes)
}

/// Scene type, five-color palette, dominant materials and a coarse
/// near/mid/far sketch (persons are left out of the sketch).
pub fn summarize_scene(scene: &Scene, image: &RgbImage) -> Result<SceneSummary, RecommendError> {
    if scene.detections.is_empty() {
        return Err(RecommendError::EmptyScene);
    }
    if image.width() == 0 || image.height() == 0 {
        return Err(RecommendError::ImageDecode("image has no pixels".into()));
    }
    let mut materials = BTreeSet::new();
    let mut depth_bands: BTreeMap<DepthBand, Vec<String>> =
        [DepthBand::Near, DepthBand::Mid, DepthBand::Far].into_iter().map(|b| (b, Vec::new())).collect();
    for d in &scene.detections {
        materials.extend(materials_for(&d.label).iter().map(|m| m.to_string()));
        if d.label == PERSON {
            continue;
        }
        let band = depth_bands.get_mut(&DepthBand::from_bottom(d.bbox.bottom())).expect("all bands present");
        if !band.contains(&d.label) {
            band.push(d.label.clone());
        }
    }
    Ok(SceneSummary {
        scene_type: scene.scene_category.clone(),
        palette: extract_palette(image),
        materials: materials.into_iter().collect(),
        depth_bands,
    })
}
