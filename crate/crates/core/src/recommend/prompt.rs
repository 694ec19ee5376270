use serde::{Deserialize, Serialize};

use super::{RecommendError, SceneSummary};
use crate::ingest::{BBox, Scene};

/// The third-object prompt. `{filename}`, `{object1}` and `{object2}` are
/// substituted in a single pass.
pub const PROMPT_TEMPLATE: &str = "You are given an input image of an urban scene along with an anchor object and a co-occurrence object. Based on the scene in the image, propose five options for a third object that would plausibly fit into the scene in a socially active public space.

For each object, provide:

Object \u{2013} The object\u{2019}s name.

Description \u{2013} A detailed paragraph that can be directly used for text-to-3D generation. This description must specify the object\u{2019}s appearance, materials, approximate scale, color palette that matches the scene, style cues, likely placement relative to the anchor and co-occurrence objects, and functional details such as geometry, key components, and reasonable dimensions. Ground every detail in the visual context of the provided image so that the 3D model will integrate naturally into the scene. However, do not specify where the object is supposed to be placed in the scene. It should be an independent object without a background. Avoid brand names, unsafe elements, or features that block primary circulation.

Only output the result as a CSV file with exactly two columns: Object and Description. Do not include any other commentary or formatting.

Inputs:

Scene image: {filename}

Anchor object: {object1}

Co-occurrence object: {object2}";

/// Appended on retries after an unusable reply.
pub const STRICT_FORMAT_SUFFIX: &str = "

Your previous reply could not be used. Reply with CSV only: the first line must be exactly Object,Description followed by exactly five data rows, one per object. Wrap every Description in double quotes and escape inner quotes by doubling them. Do not add numbering, headings, code fences or any text before or after the CSV.";

/// Normalized boxes of the anchor and co-occurrence object.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CropPair {
    pub anchor: BBox,
    pub co_object: BBox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system_prompt_text: String,
    pub scene_image_ref: String,
    pub anchor: String,
    pub co_object: String,
    pub summary: SceneSummary,
    pub crops: Option<CropPair>,
}

fn substitute(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len() + 64);
    let mut rest = template;
    'scan: while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let tail = &rest[open..];
        for (key, value) in vars {
            let slot = format!("{{{key}}}");
            if tail.starts_with(&slot) {
                out.push_str(value);
                rest = &tail[slot.len()..];
                continue 'scan;
            }
        }
        out.push('{');
        rest = &tail[1..];
    }
    out.push_str(rest);
    out
}

fn fmt_box(b: &BBox) -> String {
    format!("[{:.3}, {:.3}, {:.3}, {:.3}]", b.x, b.y, b.w, b.h)
}

/// Assemble the prompt for an (anchor, co-object) pair in `scene`.
///
/// The anchor must be detected in the scene. The co-object usually is a
/// statistical complement and may be absent; crops are attached only when
/// both objects were detected.
pub fn build_prompt(
    scene: &Scene,
    summary: &SceneSummary,
    anchor: &str,
    co_object: &str,
) -> Result<PromptBundle, RecommendError> {
    if anchor == co_object {
        return Err(RecommendError::InvalidPair(anchor.to_string()));
    }
    let anchor_det = scene.best_detection(anchor).ok_or_else(|| RecommendError::MissingAnchor(anchor.to_string()))?;
    let co_det = scene.best_detection(co_object);

    let image_ref = scene.image_uri.clone().unwrap_or_else(|| scene.scene_id.clone());
    let filename = image_ref.rsplit(['/', '\\']).next().unwrap_or(&image_ref).to_string();
    let mut text = substitute(PROMPT_TEMPLATE, &[("filename", &filename), ("object1", anchor), ("object2", co_object)]);
    text.push_str("\n\nScene summary:\n\n");
    text.push_str(&summary.render());
    text.push_str(&format!("\nAnchor box: {}", fmt_box(&anchor_det.bbox)));
    if let Some(d) = co_det {
        text.push_str(&format!("\nCo-occurrence box: {}", fmt_box(&d.bbox)));
    }

    Ok(PromptBundle {
        system_prompt_text: text,
        scene_image_ref: image_ref,
        anchor: anchor.to_string(),
        co_object: co_object.to_string(),
        summary: summary.clone(),
        crops: co_det.map(|d| CropPair { anchor: anchor_det.bbox, co_object: d.bbox }),
    })
}

pub fn tightened_prompt(bundle: &PromptBundle) -> String {
    format!("{}{}", bundle.system_prompt_text, STRICT_FORMAT_SUFFIX)
}
