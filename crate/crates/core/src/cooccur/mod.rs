//! Scene-level co-occurrence statistics.
//!
//! Counting is presence based: each scene contributes its *set* of classes,
//! so a pair is counted at most once per scene no matter how many instances
//! were detected. The diagonal holds the per-class scene count and is never
//! ranked.

mod embed;
mod export;

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::ingest::{Scene, Vocabulary, UNKNOWN_LABEL};

pub use embed::{EmbeddingVector, NormMode, RankEntry, Ranking};
pub use export::{ExportForm, MatrixTable};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CooccurError {
    #[error("label {0:?} is not in the vocabulary")]
    UnknownLabel(String),
    #[error("matrices were built over different vocabularies")]
    VocabMismatch,
    #[error("k must be at least 1")]
    InvalidK,
    #[error("invalid matrix snapshot: {0}")]
    Snapshot(String),
    #[error("invalid matrix table: {0}")]
    Table(String),
}

/// Symmetric pair counts plus per-class scene counts over a corpus.
#[derive(Debug, Clone)]
pub struct CooccurrenceMatrix {
    vocab: Arc<Vocabulary>,
    counts: Vec<u64>,
    anchor_counts: Vec<u64>,
    scenes_processed: u64,
}

impl PartialEq for CooccurrenceMatrix {
    fn eq(&self, other: &Self) -> bool {
        *self.vocab == *other.vocab
            && self.counts == other.counts
            && self.anchor_counts == other.anchor_counts
            && self.scenes_processed == other.scenes_processed
    }
}

impl CooccurrenceMatrix {
    pub fn zeros(vocab: Arc<Vocabulary>) -> Self {
        let n = vocab.len();
        CooccurrenceMatrix { vocab, counts: vec![0; n * n], anchor_counts: vec![0; n], scenes_processed: 0 }
    }

    /// Count every scene. Scenes are processed in parallel and combined with
    /// [`merge`](Self::merge), which is exact for integer counts.
    pub fn build(scenes: &[Scene], vocab: Arc<Vocabulary>) -> Result<Self, CooccurError> {
        scenes
            .par_iter()
            .try_fold(
                || Self::zeros(vocab.clone()),
                |mut m, scene| {
                    m.add_scene(scene)?;
                    Ok(m)
                },
            )
            .try_reduce(|| Self::zeros(vocab.clone()), |a, b| a.merge(&b))
    }

    /// One matrix per `scene_category`.
    pub fn build_partitioned(scenes: &[Scene], vocab: Arc<Vocabulary>) -> Result<BTreeMap<String, Self>, CooccurError> {
        let mut groups: BTreeMap<String, Vec<Scene>> = BTreeMap::new();
        for s in scenes {
            groups.entry(s.scene_category.clone()).or_default().push(s.clone());
        }
        groups.into_iter().map(|(k, v)| Ok((k, Self::build(&v, vocab.clone())?))).collect()
    }

    pub fn add_scene(&mut self, scene: &Scene) -> Result<(), CooccurError> {
        let mut present = Vec::with_capacity(scene.detections.len());
        for d in &scene.detections {
            match self.vocab.index_of(&d.label) {
                Some(i) => present.push(i),
                // retained-but-unmapped detections carry no class identity
                None if d.label == UNKNOWN_LABEL => {}
                None => return Err(CooccurError::UnknownLabel(d.label.clone())),
            }
        }
        present.sort_unstable();
        present.dedup();

        let n = self.n();
        for (a, &i) in present.iter().enumerate() {
            self.anchor_counts[i] += 1;
            self.counts[i * n + i] += 1;
            for &j in &present[a + 1..] {
                self.counts[i * n + j] += 1;
                self.counts[j * n + i] += 1;
            }
        }
        self.scenes_processed += 1;
        Ok(())
    }

    /// Entrywise sum of two matrices over the same vocabulary.
    pub fn merge(&self, other: &Self) -> Result<Self, CooccurError> {
        if *self.vocab != *other.vocab {
            return Err(CooccurError::VocabMismatch);
        }
        let add = |a: &[u64], b: &[u64]| a.iter().zip(b).map(|(x, y)| x + y).collect();
        Ok(CooccurrenceMatrix {
            vocab: self.vocab.clone(),
            counts: add(&self.counts, &other.counts),
            anchor_counts: add(&self.anchor_counts, &other.anchor_counts),
            scenes_processed: self.scenes_processed + other.scenes_processed,
        })
    }

    /// Every count multiplied by `factor`. Rankings are invariant under this.
    pub fn scaled(&self, factor: u64) -> Self {
        CooccurrenceMatrix {
            vocab: self.vocab.clone(),
            counts: self.counts.iter().map(|c| c * factor).collect(),
            anchor_counts: self.anchor_counts.iter().map(|c| c * factor).collect(),
            scenes_processed: self.scenes_processed * factor,
        }
    }

    /// Build directly from raw counts, checking every structural invariant.
    pub fn from_parts(
        vocab: Arc<Vocabulary>,
        counts: Vec<Vec<u64>>,
        anchor_counts: Vec<u64>,
        scenes_processed: u64,
    ) -> Result<Self, CooccurError> {
        let n = vocab.len();
        let bad = |m: String| Err(CooccurError::Snapshot(m));
        if counts.len() != n || counts.iter().any(|r| r.len() != n) {
            return bad(format!("counts must be {n}x{n}"));
        }
        if anchor_counts.len() != n {
            return bad(format!("anchor_counts must have {n} entries"));
        }
        for i in 0..n {
            if anchor_counts[i] > scenes_processed {
                return bad(format!("anchor count of {:?} exceeds scenes processed", vocab.name(i)));
            }
            if counts[i][i] != anchor_counts[i] {
                return bad(format!("diagonal of {:?} differs from its anchor count", vocab.name(i)));
            }
            for j in 0..n {
                if counts[i][j] != counts[j][i] {
                    return bad(format!("asymmetric entry ({i}, {j})"));
                }
                if counts[i][j] > anchor_counts[i].min(anchor_counts[j]) {
                    return bad(format!("entry ({i}, {j}) exceeds an anchor count"));
                }
            }
        }
        Ok(CooccurrenceMatrix {
            vocab,
            counts: counts.into_iter().flatten().collect(),
            anchor_counts,
            scenes_processed,
        })
    }

    pub fn vocab(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    pub fn n(&self) -> usize {
        self.anchor_counts.len()
    }

    pub fn count(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.n() + j]
    }

    pub fn row(&self, i: usize) -> &[u64] {
        let n = self.n();
        &self.counts[i * n..(i + 1) * n]
    }

    pub fn anchor_count(&self, i: usize) -> u64 {
        self.anchor_counts[i]
    }

    pub fn anchor_counts(&self) -> &[u64] {
        &self.anchor_counts
    }

    pub fn scenes_processed(&self) -> u64 {
        self.scenes_processed
    }

    /// Count between two class names.
    pub fn pair_count(&self, a: &str, b: &str) -> Result<u64, CooccurError> {
        Ok(self.count(self.class_id(a)?, self.class_id(b)?))
    }

    pub(crate) fn class_id(&self, class: &str) -> Result<usize, CooccurError> {
        self.vocab.index_of(class).ok_or_else(|| CooccurError::UnknownLabel(class.to_string()))
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        (0..self.n()).map(|i| self.row(i).to_vec()).collect()
    }
}

/// Free-function form of [`CooccurrenceMatrix::build`].
pub fn build_matrix(scenes: &[Scene], vocab: Arc<Vocabulary>) -> Result<CooccurrenceMatrix, CooccurError> {
    CooccurrenceMatrix::build(scenes, vocab)
}
