use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::MeshError;
use crate::recommend::{Suggestion, SuggestionStatus};

pub const FOOT_M: f64 = 0.3048;
pub const INCH_M: f64 = 0.0254;
pub const CM_M: f64 = 0.01;
pub const MM_M: f64 = 0.001;

pub const MIN_HEIGHT_M: f64 = 0.05;
pub const MAX_HEIGHT_M: f64 = 20.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationBrief {
    pub title: String,
    pub body: String,
    pub target_height_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub style_notes: Option<String>,
}

impl GenerationBrief {
    pub fn validate(&self) -> Result<(), MeshError> {
        if self.body.trim().is_empty() {
            return Err(MeshError::MissingDescription(self.title.clone()));
        }
        if !(MIN_HEIGHT_M..=MAX_HEIGHT_M).contains(&self.target_height_m) {
            return Err(MeshError::InvalidBrief(format!(
                "target height {} m outside [{MIN_HEIGHT_M}, {MAX_HEIGHT_M}]",
                self.target_height_m
            )));
        }
        Ok(())
    }

    /// Text sent to the text-to-3D provider.
    pub fn to_text(&self) -> String {
        let mut s = format!("Object: {}\nTarget height: {} m\n", self.title, self.target_height_m);
        if let Some(style) = &self.style_notes {
            s.push_str(&format!("Style: {style}\n"));
        }
        s.push_str(&format!("Description: {}\n", self.body));
        s
    }

    /// The brief with geometry constraints appended, used for the regeneration pass.
    pub fn tightened(&self) -> Self {
        let mut b = self.clone();
        b.style_notes = Some(format!(
            "{}single closed object resting on a flat base, no ground plane or background, \
             no text or logos, clean manifold geometry, overall height {} m",
            self.style_notes.as_ref().map(|s| format!("{s}; ")).unwrap_or_default(),
            self.target_height_m
        ));
        b
    }
}

/// Per-class fallback heights, matched by keyword against the object name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeTable {
    pub entries: Vec<(String, f64)>,
    pub fallback_m: f64,
}

impl Default for SizeTable {
    fn default() -> Self {
        let entries = [
            ("bench", 0.8),
            ("chess table", 0.76),
            ("table", 0.75),
            ("planter", 0.8),
            ("bike rack", 0.9),
            ("bicycle rack", 0.9),
            ("fountain", 1.0),
            ("lamp", 3.5),
            ("signpost", 2.4),
            ("sign", 2.2),
            ("kiosk", 2.0),
            ("sculpture", 1.5),
            ("shelter", 2.4),
            ("cart", 1.5),
            ("trash can", 1.0),
            ("bollard", 0.9),
            ("tree", 5.0),
        ];
        SizeTable { entries: entries.iter().map(|(k, v)| (k.to_string(), *v)).collect(), fallback_m: 1.0 }
    }
}

impl SizeTable {
    pub fn lookup(&self, object_name: &str) -> f64 {
        let name = object_name.to_lowercase();
        self.entries.iter().find(|(k, _)| name.contains(k.as_str())).map(|(_, v)| *v).unwrap_or(self.fallback_m)
    }
}

const NUM: &str = r"(\d+(?:\.\d+)?)";
const UNIT: &str = r"(feet|foot|ft|inches|inch|centimeters|centimetres|centimeter|centimetre|cm|millimeters|millimetres|mm|meters|metres|meter|metre|m)\b";

fn height_patterns() -> &'static [Regex; 3] {
    static P: OnceLock<[Regex; 3]> = OnceLock::new();
    P.get_or_init(|| {
        [
            // "3.5 feet tall", "95 cm tall", "2.5 feet high", "6-foot-tall"
            Regex::new(&format!(r"(?i){NUM}[\s-]*{UNIT}[\s-]+(?:tall|high)\b")).unwrap(),
            // "approximately 3.5 meters in height"
            Regex::new(&format!(r"(?i){NUM}\s*{UNIT}\s+in\s+height\b")).unwrap(),
            // "the height is about 80 cm"
            Regex::new(&format!(
                r"(?i)\bheight\s+(?:is\s+|of\s+)?(?:about\s+|approximately\s+|around\s+|roughly\s+|nearly\s+)?{NUM}\s*{UNIT}"
            ))
            .unwrap(),
        ]
    })
}

fn any_dimension() -> &'static Regex {
    static P: OnceLock<Regex> = OnceLock::new();
    P.get_or_init(|| Regex::new(&format!(r"(?i)\b{NUM}\s*{UNIT}")).unwrap())
}

pub fn unit_to_meters(unit: &str) -> f64 {
    match unit.to_lowercase().as_str() {
        "feet" | "foot" | "ft" => FOOT_M,
        "inches" | "inch" => INCH_M,
        "centimeters" | "centimetres" | "centimeter" | "centimetre" | "cm" => CM_M,
        "millimeters" | "millimetres" | "mm" => MM_M,
        _ => 1.0,
    }
}

/// Height in meters stated in a free-text description.
///
/// Height-qualified phrases ("… tall", "… in height", "height is …") win;
/// the earliest one in the text is used. Otherwise the first dimension of
/// any kind is taken.
pub fn extract_height_m(text: &str) -> Option<f64> {
    let to_m = |c: regex::Captures| -> Option<(usize, f64)> {
        let start = c.get(0)?.start();
        let value: f64 = c.get(1)?.as_str().parse().ok()?;
        Some((start, value * unit_to_meters(c.get(2)?.as_str())))
    };
    height_patterns()
        .iter()
        .filter_map(|re| re.captures(text).and_then(to_m))
        .min_by_key(|(start, _)| *start)
        .or_else(|| any_dimension().captures(text).and_then(to_m))
        .map(|(_, m)| m)
}

/// Turn an accepted suggestion into a text-to-3D brief.
pub fn make_brief(s: &Suggestion, sizes: &SizeTable) -> Result<GenerationBrief, MeshError> {
    if s.status != SuggestionStatus::Accepted {
        return Err(MeshError::NotAccepted(s.object_name.clone()));
    }
    if s.description.trim().is_empty() {
        return Err(MeshError::MissingDescription(s.object_name.clone()));
    }
    let target_height_m = extract_height_m(&s.description)
        .filter(|h| (MIN_HEIGHT_M..=MAX_HEIGHT_M).contains(h))
        .unwrap_or_else(|| sizes.lookup(&s.object_name));
    let brief = GenerationBrief {
        title: s.object_name.clone(),
        body: s.description.clone(),
        target_height_m,
        style_notes: None,
    };
    brief.validate()?;
    Ok(brief)
}
