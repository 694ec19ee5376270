use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use super::{BBox, ContextTag, Detection, Scene, Vocabulary};

/// Label given to retained detections that have no canonical class.
pub const UNKNOWN_LABEL: &str = "unknown";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("schema error in {}{locus}: {message}", file.as_ref().map(|f| format!("{f}, ")).unwrap_or_default())]
    Schema { file: Option<String>, locus: String, message: String },
    #[error("duplicate scene id {scene_id:?} ({locus})")]
    DuplicateSceneId { scene_id: String, locus: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl IngestError {
    fn schema(locus: impl Into<String>, message: impl Into<String>) -> Self {
        IngestError::Schema { file: None, locus: locus.into(), message: message.into() }
    }

    fn in_file(self, path: &Path) -> Self {
        let name = path.display().to_string();
        match self {
            IngestError::Schema { locus, message, .. } => IngestError::Schema { file: Some(name), locus, message },
            IngestError::DuplicateSceneId { scene_id, locus } => {
                IngestError::DuplicateSceneId { scene_id, locus: format!("{name}, {locus}") }
            }
            other => other,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseOptions {
    /// Keep unmapped detections under [`UNKNOWN_LABEL`] instead of dropping them.
    pub keep_unknown: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedFile {
    pub scenes: Vec<Scene>,
    /// Detections dropped because their label had no canonical mapping.
    pub dropped: usize,
}

#[derive(Deserialize)]
struct RawDetection {
    label: String,
    confidence: f64,
    bbox: Vec<f64>,
}

#[derive(Deserialize)]
struct RawScene {
    scene_id: String,
    #[serde(default)]
    image_uri: Option<String>,
    scene_category: String,
    #[serde(default)]
    context_tags: Vec<String>,
    detections: Vec<RawDetection>,
}

/// Parse one detection file (a JSON list of scene records).
pub fn parse_detection_file(bytes: &[u8], vocab: &Vocabulary, opts: ParseOptions) -> Result<ParsedFile, IngestError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| IngestError::schema(format!("byte {}", e.valid_up_to()), "not UTF-8"))?;
    let records: Vec<serde_json::Value> = serde_json::from_str(text).map_err(|e| {
        IngestError::schema(
            format!("line {} column {}", e.line(), e.column()),
            format!("expected a list of scene records: {e}"),
        )
    })?;

    let mut scenes = Vec::with_capacity(records.len());
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut dropped = 0;
    for (ri, value) in records.into_iter().enumerate() {
        let raw: RawScene =
            serde_json::from_value(value).map_err(|e| IngestError::schema(format!("record {ri}"), e.to_string()))?;
        let locus = format!("record {ri} (scene {:?})", raw.scene_id);
        if raw.scene_id.trim().is_empty() {
            return Err(IngestError::schema(locus, "scene_id is empty"));
        }
        if let Some(prev) = seen.insert(raw.scene_id.clone(), ri) {
            return Err(IngestError::DuplicateSceneId {
                scene_id: raw.scene_id,
                locus: format!("records {prev} and {ri}"),
            });
        }
        let mut context_tags = BTreeSet::new();
        for tag in &raw.context_tags {
            let tag: ContextTag = tag.parse().map_err(|m| IngestError::schema(&locus, m))?;
            context_tags.insert(tag);
        }
        let mut detections = Vec::with_capacity(raw.detections.len());
        for (di, d) in raw.detections.into_iter().enumerate() {
            let dlocus = || format!("{locus}, detection {di}");
            let [x, y, w, h] = <[f64; 4]>::try_from(d.bbox.as_slice())
                .map_err(|_| IngestError::schema(dlocus(), "bbox must have exactly 4 numbers [x, y, w, h]"))?;
            let bbox = BBox { x, y, w, h };
            bbox.validate().map_err(|m| IngestError::schema(dlocus(), m))?;
            if !(0.0..=1.0).contains(&d.confidence) {
                return Err(IngestError::schema(dlocus(), format!("confidence {} outside [0, 1]", d.confidence)));
            }
            let label = match vocab.canonicalize(&d.label) {
                Some(c) => c.to_string(),
                None if opts.keep_unknown => UNKNOWN_LABEL.to_string(),
                None => {
                    dropped += 1;
                    continue;
                }
            };
            detections.push(Detection { label, confidence: d.confidence, bbox });
        }
        scenes.push(Scene {
            scene_id: raw.scene_id,
            image_uri: raw.image_uri,
            scene_category: raw.scene_category,
            context_tags,
            detections,
        });
    }
    Ok(ParsedFile { scenes, dropped })
}

/// Serialize scenes back into the detection-file schema.
pub fn scenes_to_json(scenes: &[Scene]) -> String {
    serde_json::to_string_pretty(scenes).expect("scenes serialize")
}

/// Every scene found under a corpus directory.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub root: PathBuf,
    pub scenes: Vec<Scene>,
    pub dropped: usize,
    pub files: Vec<PathBuf>,
}

impl Corpus {
    pub fn scene(&self, scene_id: &str) -> Option<&Scene> {
        self.scenes.iter().find(|s| s.scene_id == scene_id)
    }

    /// Resolve a scene's image locator against the corpus root.
    pub fn image_path(&self, scene: &Scene) -> Option<PathBuf> {
        let uri = scene.image_uri.as_deref()?;
        let uri = uri.strip_prefix("file://").unwrap_or(uri);
        let p = Path::new(uri);
        Some(if p.is_absolute() { p.to_path_buf() } else { self.root.join(p) })
    }
}

/// Load every `*.json` detection file in `dir` (sorted by name, not recursive).
pub fn load_corpus_dir(dir: &Path, vocab: &Vocabulary, opts: ParseOptions) -> Result<Corpus, IngestError> {
    let io = |source| IngestError::Io { path: dir.display().to_string(), source };
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();

    let mut corpus = Corpus { root: dir.to_path_buf(), ..Corpus::default() };
    let mut owner: HashMap<String, PathBuf> = HashMap::new();
    for path in &files {
        let bytes = fs::read(path).map_err(|source| IngestError::Io { path: path.display().to_string(), source })?;
        let parsed = parse_detection_file(&bytes, vocab, opts).map_err(|e| e.in_file(path))?;
        for scene in &parsed.scenes {
            if let Some(prev) = owner.insert(scene.scene_id.clone(), path.clone()) {
                return Err(IngestError::DuplicateSceneId {
                    scene_id: scene.scene_id.clone(),
                    locus: format!("{} and {}", prev.display(), path.display()),
                });
            }
        }
        corpus.dropped += parsed.dropped;
        corpus.scenes.extend(parsed.scenes);
    }
    corpus.files = files;
    Ok(corpus)
}
