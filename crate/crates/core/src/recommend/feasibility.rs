use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{RecommendError, Suggestion, SuggestionStatus};
use crate::ingest::{ContextTag, Scene};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequireMode {
    /// Every required tag must be present.
    #[default]
    All,
    /// At least one required tag must be present.
    Any,
}

/// A scene-support requirement for objects matching `pattern`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeasibilityRule {
    pub pattern: String,
    #[serde(default)]
    pub required_tags: BTreeSet<ContextTag>,
    #[serde(default)]
    pub require: RequireMode,
    #[serde(default)]
    pub forbidden_tags: BTreeSet<ContextTag>,
}

fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).map(str::to_lowercase).collect()
}

fn token_eq(word: &str, pattern: &str) -> bool {
    word == pattern || word.strip_suffix('s') == Some(pattern) || word.strip_suffix("es") == Some(pattern)
}

impl FeasibilityRule {
    pub fn new(pattern: &str, require: RequireMode, required: &[ContextTag], forbidden: &[ContextTag]) -> Self {
        FeasibilityRule {
            pattern: pattern.to_string(),
            required_tags: required.iter().copied().collect(),
            require,
            forbidden_tags: forbidden.iter().copied().collect(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if tokens(&self.pattern).is_empty() {
            return Err(format!("rule pattern {:?} has no words", self.pattern));
        }
        if let Some(t) = self.required_tags.intersection(&self.forbidden_tags).next() {
            return Err(format!("rule {:?} both requires and forbids {t}", self.pattern));
        }
        Ok(())
    }

    /// Whole-word, case-insensitive match of the pattern inside `name`;
    /// a trailing plural `s`/`es` on the name is tolerated.
    pub fn matches(&self, name: &str) -> bool {
        let words = tokens(name);
        let pat = tokens(&self.pattern);
        !pat.is_empty()
            && words.len() >= pat.len()
            && words.windows(pat.len()).any(|w| w.iter().zip(&pat).all(|(a, b)| token_eq(a, b)))
    }

    /// Why the scene cannot host a matching object, if it cannot.
    pub fn violation(&self, tags: &BTreeSet<ContextTag>) -> Option<String> {
        let join = |sep: &str| self.required_tags.iter().map(|t| t.as_str()).collect::<Vec<_>>().join(sep);
        if !self.required_tags.is_empty() {
            let ok = match self.require {
                RequireMode::All => self.required_tags.is_subset(tags),
                RequireMode::Any => !self.required_tags.is_disjoint(tags),
            };
            if !ok {
                let sep = if self.require == RequireMode::Any { "|" } else { "+" };
                return Some(format!("{} requires {}", self.pattern, join(sep)));
            }
        }
        self.forbidden_tags.intersection(tags).next().map(|t| format!("{} not supported where {t}", self.pattern))
    }
}

/// Seed rule set; extend through a rules file.
pub fn default_rules() -> Vec<FeasibilityRule> {
    use ContextTag::*;
    use RequireMode::Any;
    vec![
        FeasibilityRule::new("crosswalk", Any, &[StreetEdge, Intersection], &[]),
        FeasibilityRule::new("traffic light", Any, &[StreetEdge, Intersection], &[]),
        FeasibilityRule::new("bus stop", Any, &[StreetEdge], &[]),
        FeasibilityRule::new("bus shelter", Any, &[StreetEdge], &[]),
        FeasibilityRule::new("bike lane", Any, &[StreetEdge], &[]),
        FeasibilityRule::new("parklet", Any, &[StreetEdge], &[]),
        FeasibilityRule::new("dock", Any, &[WaterAdjacent], &[]),
        FeasibilityRule::new("wheelchair ramp", Any, &[StairsPresent], &[]),
    ]
}

/// Read a JSON rules file: a list of `{pattern, required_tags, require?, forbidden_tags}`.
pub fn load_rules(path: &Path) -> Result<Vec<FeasibilityRule>, RecommendError> {
    let text = std::fs::read_to_string(path).map_err(|e| RecommendError::Rules(format!("{}: {e}", path.display())))?;
    let rules: Vec<FeasibilityRule> = serde_json::from_str(&text).map_err(|e| RecommendError::Rules(e.to_string()))?;
    for r in &rules {
        r.validate().map_err(RecommendError::Rules)?;
    }
    Ok(rules)
}

fn rerank(mut list: Vec<Suggestion>) -> Vec<Suggestion> {
    // survivors keep their relative order and come first
    list.sort_by_key(|s| s.status == SuggestionStatus::Filtered);
    for (s, rank) in list.iter_mut().zip(1..) {
        s.rank = rank;
    }
    list
}

/// Mark proposed suggestions the scene cannot support as filtered.
///
/// Survivors keep their order and are ranked `1..=m`; filtered entries
/// follow them, ranked after the survivors.
pub fn apply_feasibility(suggestions: Vec<Suggestion>, scene: &Scene, rules: &[FeasibilityRule]) -> Vec<Suggestion> {
    let list = suggestions
        .into_iter()
        .map(|mut s| {
            if s.is_proposed() {
                let reason =
                    rules.iter().filter(|r| r.matches(&s.object_name)).find_map(|r| r.violation(&scene.context_tags));
                if let Some(reason) = reason {
                    s.status = SuggestionStatus::Filtered;
                    s.filter_reason = Some(reason);
                }
            }
            s
        })
        .collect();
    rerank(list)
}

fn name_key(name: &str) -> Vec<String> {
    tokens(name)
        .into_iter()
        .map(|t| match t.strip_suffix('s') {
            Some(stem) if stem.len() > 2 => stem.to_string(),
            _ => t,
        })
        .collect()
}

/// Filter proposed suggestions whose normalized name repeats an earlier one
/// (in `existing` or earlier in `suggestions`).
pub fn suppress_duplicates(suggestions: Vec<Suggestion>, existing: &[Suggestion]) -> Vec<Suggestion> {
    let mut seen: Vec<(Vec<String>, String)> = existing
        .iter()
        .filter(|s| s.status != SuggestionStatus::Filtered)
        .map(|s| (name_key(&s.object_name), s.object_name.clone()))
        .collect();
    let list = suggestions
        .into_iter()
        .map(|mut s| {
            let key = name_key(&s.object_name);
            if let Some((_, first)) = seen.iter().find(|(k, _)| *k == key) {
                if s.is_proposed() {
                    s.status = SuggestionStatus::Filtered;
                    s.filter_reason = Some(format!("duplicate of {first}"));
                }
            } else if s.status != SuggestionStatus::Filtered {
                seen.push((key, s.object_name.clone()));
            }
            s
        })
        .collect();
    rerank(list)
}
