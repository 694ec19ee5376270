use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Class that must always be present; the activity filter counts it.
pub const PERSON: &str = "person";

const DEFAULT_VOCAB_JSON: &str = include_str!("../../fixtures/vocab.json");

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VocabError {
    #[error("class name {0:?} is not lowercase and trimmed")]
    NotCanonical(String),
    #[error("class {0:?} listed more than once")]
    DuplicateClass(String),
    #[error("synonym {alias:?} maps to unknown class {class:?}")]
    DanglingSynonym { alias: String, class: String },
    #[error("vocabulary must contain \"person\"")]
    MissingPerson,
    #[error("malformed vocabulary file: {0}")]
    Malformed(String),
}

#[derive(Serialize, Deserialize)]
struct VocabularyFile {
    classes: Vec<String>,
    #[serde(default)]
    synonyms: BTreeMap<String, String>,
}

/// Ordered class list (index = class id) plus alias table.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "VocabularyFile", into = "VocabularyFile")]
pub struct Vocabulary {
    classes: Vec<String>,
    synonyms: BTreeMap<String, String>,
    index: HashMap<String, usize>,
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.classes == other.classes && self.synonyms == other.synonyms
    }
}

impl Eq for Vocabulary {}

impl TryFrom<VocabularyFile> for Vocabulary {
    type Error = VocabError;

    fn try_from(file: VocabularyFile) -> Result<Self, Self::Error> {
        Vocabulary::new(file.classes, file.synonyms)
    }
}

impl From<Vocabulary> for VocabularyFile {
    fn from(v: Vocabulary) -> Self {
        VocabularyFile { classes: v.classes, synonyms: v.synonyms }
    }
}

pub(crate) fn normalize_token(raw: &str) -> String {
    raw.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

impl Vocabulary {
    pub fn new(classes: Vec<String>, synonyms: BTreeMap<String, String>) -> Result<Self, VocabError> {
        let mut index = HashMap::with_capacity(classes.len());
        for (i, class) in classes.iter().enumerate() {
            if class.is_empty() || normalize_token(class) != *class {
                return Err(VocabError::NotCanonical(class.clone()));
            }
            if index.insert(class.clone(), i).is_some() {
                return Err(VocabError::DuplicateClass(class.clone()));
            }
        }
        if !index.contains_key(PERSON) {
            return Err(VocabError::MissingPerson);
        }
        let mut normalized = BTreeMap::new();
        for (alias, class) in synonyms {
            if !index.contains_key(&class) {
                return Err(VocabError::DanglingSynonym { alias, class });
            }
            normalized.insert(normalize_token(&alias), class);
        }
        Ok(Vocabulary { classes, synonyms: normalized, index })
    }

    /// The shipped urban vocabulary: eighteen street-furniture classes plus `person`.
    pub fn default_urban() -> Self {
        Self::from_json(DEFAULT_VOCAB_JSON).expect("bundled vocabulary is valid")
    }

    pub fn from_json(text: &str) -> Result<Self, VocabError> {
        serde_json::from_str(text).map_err(|e| VocabError::Malformed(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("vocabulary serializes")
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn synonyms(&self) -> &BTreeMap<String, String> {
        &self.synonyms
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn index_of(&self, class: &str) -> Option<usize> {
        self.index.get(class).copied()
    }

    pub fn name(&self, id: usize) -> &str {
        &self.classes[id]
    }

    pub fn contains(&self, class: &str) -> bool {
        self.index.contains_key(class)
    }

    /// Lowercase and trim, then exact class match, then synonym match.
    pub fn canonicalize(&self, raw: &str) -> Option<&str> {
        let token = normalize_token(raw);
        if let Some(&i) = self.index.get(&token) {
            return Some(&self.classes[i]);
        }
        self.synonyms.get(&token).map(String::as_str)
    }

    /// Hex SHA-256 over the class order and the sorted synonym table.
    ///
    /// Matrix snapshots carry this so a cache built under another vocabulary
    /// is rejected on load.
    pub fn content_hash(&self) -> String {
        let mut canon = self.classes.join("\n");
        canon.push_str("\n--\n");
        let lines: Vec<String> = self.synonyms.iter().map(|(k, v)| format!("{k}\t{v}")).collect();
        canon.push_str(&lines.join("\n"));
        let digest = Sha256::digest(canon.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Free-function form of [`Vocabulary::canonicalize`].
pub fn canonicalize_label<'v>(raw: &str, vocab: &'v Vocabulary) -> Option<&'v str> {
    vocab.canonicalize(raw)
}
