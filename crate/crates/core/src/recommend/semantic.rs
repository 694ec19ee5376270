use super::candidates::parse_candidate_csv;
use super::prompt::{tightened_prompt, PromptBundle};
use super::vlm::{VlmProvider, VlmRequest};
use super::{RecommendError, Suggestion};

/// Candidates requested per call.
pub const SEMANTIC_COUNT: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SemanticOptions {
    pub max_retries: u32,
}

impl Default for SemanticOptions {
    fn default() -> Self {
        SemanticOptions { max_retries: 2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemanticBatch {
    pub suggestions: Vec<Suggestion>,
    pub retries: u32,
}

/// Ask the provider for five third-object candidates.
///
/// Unusable replies (unparseable, or fewer than five rows) are retried with
/// the strict-format suffix up to `max_retries` times. Provider errors are
/// returned immediately.
pub fn request_semantic_candidates(
    bundle: &PromptBundle,
    provider: &dyn VlmProvider,
    opts: SemanticOptions,
) -> Result<SemanticBatch, RecommendError> {
    let mut last = None;
    for attempt in 0..=opts.max_retries {
        let prompt = if attempt == 0 { bundle.system_prompt_text.clone() } else { tightened_prompt(bundle) };
        let request =
            VlmRequest { prompt, image_refs: vec![bundle.scene_image_ref.clone()], crops: bundle.crops, attempt };
        let reply = provider.complete(&request)?;
        match parse_candidate_csv(&reply) {
            Ok(rows) if rows.len() >= SEMANTIC_COUNT => {
                if rows.len() > SEMANTIC_COUNT {
                    log::warn!("provider returned {} candidates, keeping the first {SEMANTIC_COUNT}", rows.len());
                }
                let suggestions = rows
                    .into_iter()
                    .take(SEMANTIC_COUNT)
                    .zip(1..)
                    .map(|((name, desc), rank)| Suggestion::semantic(name, desc, rank))
                    .collect();
                return Ok(SemanticBatch { suggestions, retries: attempt });
            }
            Ok(rows) => last = Some(RecommendError::TooFewCandidates { got: rows.len(), need: SEMANTIC_COUNT }),
            Err(e) => last = Some(e),
        }
        log::info!("attempt {attempt}: unusable provider reply, {}", last.as_ref().expect("set above"));
    }
    Err(last.expect("at least one attempt"))
}
