use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{vocab::normalize_token, Scene, PERSON};

/// Category wildcard: a policy whose allowed set contains it admits every category.
pub const ANY_CATEGORY: &str = "*";

const DEFAULT_CATEGORIES: [&str; 9] =
    ["street", "plaza", "park", "sidewalk", "crosswalk", "square", "market", "promenade", "bus stop"];

/// Two-stage activity filter: scene category first, then crowd size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterPolicy {
    pub allowed_categories: BTreeSet<String>,
    pub min_people: u32,
    pub person_confidence_threshold: f64,
}

impl Default for FilterPolicy {
    fn default() -> Self {
        FilterPolicy {
            allowed_categories: DEFAULT_CATEGORIES.iter().map(|s| s.to_string()).collect(),
            min_people: 5,
            person_confidence_threshold: 0.35,
        }
    }
}

impl FilterPolicy {
    pub fn validate(&self) -> Result<(), String> {
        let t = self.person_confidence_threshold;
        if !(0.0..=1.0).contains(&t) {
            return Err(format!("person confidence threshold {t} outside [0, 1]"));
        }
        Ok(())
    }

    pub fn admits_category(&self, category: &str) -> bool {
        self.allowed_categories.contains(ANY_CATEGORY)
            || self.allowed_categories.iter().any(|c| normalize_token(c) == normalize_token(category))
    }

    /// Detections labeled `person` strictly above the threshold.
    pub fn active_people(&self, scene: &Scene) -> usize {
        scene.detections.iter().filter(|d| d.label == PERSON && d.confidence > self.person_confidence_threshold).count()
    }

    pub fn retains(&self, scene: &Scene) -> bool {
        self.admits_category(&scene.scene_category) && self.active_people(scene) >= self.min_people as usize
    }
}

/// Keep scenes passing both stages, preserving input order.
pub fn filter_scenes(scenes: &[Scene], policy: &FilterPolicy) -> Vec<Scene> {
    scenes.iter().filter(|s| policy.retains(s)).cloned().collect()
}
