//! The two suggestion branches.
//!
//! The statistical branch wraps [`CooccurrenceMatrix::top_k`]; the semantic
//! branch summarizes the scene, assembles the vision-language prompt, parses
//! the CSV reply (retrying with a stricter prompt when the reply is
//! unusable) and drops candidates the scene cannot support.

mod candidates;
mod feasibility;
mod palette;
mod prompt;
mod semantic;
mod summary;
pub mod vlm;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cooccur::{CooccurError, CooccurrenceMatrix, NormMode};
use crate::provider::ProviderError;

pub use candidates::{parse_candidate_csv, parse_candidate_csv_detailed, serialize_candidates, CsvParse, RejectedRow};
pub use feasibility::{
    apply_feasibility, default_rules, load_rules, suppress_duplicates, FeasibilityRule, RequireMode,
};
pub use palette::{extract_palette, Rgb, PALETTE_SIZE};
pub use prompt::{build_prompt, tightened_prompt, CropPair, PromptBundle, PROMPT_TEMPLATE, STRICT_FORMAT_SUFFIX};
pub use semantic::{request_semantic_candidates, SemanticBatch, SemanticOptions, SEMANTIC_COUNT};
pub use summary::{decode_image, load_image, materials_for, summarize_scene, DepthBand, SceneSummary};

/// Number of statistical complements offered for an anchor.
pub const STATISTICAL_COUNT: usize = 5;

#[derive(Debug, Error)]
pub enum RecommendError {
    #[error(transparent)]
    Cooccur(#[from] CooccurError),
    #[error("cannot decode scene image: {0}")]
    ImageDecode(String),
    #[error("scene has no detections")]
    EmptyScene,
    #[error("anchor {0:?} is not detected in the scene")]
    MissingAnchor(String),
    #[error("anchor and co-occurrence object must differ (both {0:?})")]
    InvalidPair(String),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("malformed provider response: {0}")]
    MalformedResponse(String),
    #[error("provider returned {got} usable candidates, need {need}")]
    TooFewCandidates { got: usize, need: usize },
    #[error("invalid feasibility rules: {0}")]
    Rules(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Statistical,
    Semantic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuggestionStatus {
    Proposed,
    Accepted,
    Rejected,
    Filtered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suggestion {
    pub object_name: String,
    pub description: String,
    pub provenance: Provenance,
    pub rank: u32,
    pub status: SuggestionStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter_reason: Option<String>,
}

impl Suggestion {
    pub fn statistical(object_name: impl Into<String>, rank: u32) -> Self {
        Suggestion {
            object_name: object_name.into(),
            description: String::new(),
            provenance: Provenance::Statistical,
            rank,
            status: SuggestionStatus::Proposed,
            filter_reason: None,
        }
    }

    pub fn semantic(object_name: impl Into<String>, description: impl Into<String>, rank: u32) -> Self {
        Suggestion {
            object_name: object_name.into(),
            description: description.into(),
            provenance: Provenance::Semantic,
            rank,
            status: SuggestionStatus::Proposed,
            filter_reason: None,
        }
    }

    pub fn is_proposed(&self) -> bool {
        self.status == SuggestionStatus::Proposed
    }

    /// Only `proposed` may move, and only once.
    pub fn transition(&mut self, to: SuggestionStatus) -> Result<(), SuggestionStatus> {
        if self.status != SuggestionStatus::Proposed || to == SuggestionStatus::Proposed {
            return Err(self.status);
        }
        self.status = to;
        Ok(())
    }
}

/// Top-5 complements of `anchor` as statistical suggestions.
pub fn statistical_candidates(
    matrix: &CooccurrenceMatrix,
    anchor: &str,
    exclude: &[&str],
) -> Result<Vec<Suggestion>, RecommendError> {
    let ranking = matrix.top_k(anchor, STATISTICAL_COUNT, NormMode::Conditional, exclude)?;
    Ok(ranking.entries.into_iter().zip(1..).map(|(e, rank)| Suggestion::statistical(e.class, rank)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transitions_are_one_way() {
        let mut s = Suggestion::semantic("Bike Rack", "steel", 1);
        assert!(s.transition(SuggestionStatus::Proposed).is_err());
        s.transition(SuggestionStatus::Accepted).unwrap();
        assert_eq!(s.transition(SuggestionStatus::Rejected), Err(SuggestionStatus::Accepted));
    }

    #[test]
    fn statistical_on_fixture_matrix() {
        let m =
            CooccurrenceMatrix::from_snapshot_json(include_str!("../../fixtures/reference_matrix.json"), None).unwrap();
        let s = statistical_candidates(&m, "bench", &["person"]).unwrap();
        let names: Vec<_> = s.iter().map(|s| s.object_name.as_str()).collect();
        assert_eq!(names, ["window", "tree", "sign", "traffic light", "crosswalk"]);
        assert!(s.iter().all(|s| s.provenance == Provenance::Statistical && s.description.is_empty()));
        assert_eq!(s.iter().map(|s| s.rank).collect::<Vec<_>>(), [1, 2, 3, 4, 5]);
        let tree = statistical_candidates(&m, "tree", &["person"]).unwrap();
        assert_eq!(tree[0].object_name, "traffic light");
    }

    #[test]
    fn degenerate_anchor_gives_nothing() {
        let v = std::sync::Arc::new(crate::ingest::Vocabulary::default_urban());
        let m = CooccurrenceMatrix::zeros(v);
        assert!(statistical_candidates(&m, "bench", &[]).unwrap().is_empty());
        assert!(statistical_candidates(&m, "zeppelin", &[]).is_err());
    }
}
