use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::{CooccurError, CooccurrenceMatrix};

/// How an anchor's count row is turned into scores.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMode {
    /// `count(a ∧ b) / count(a)`.
    #[default]
    Conditional,
    /// Off-diagonal row divided by its off-diagonal sum.
    RowSum,
}

impl fmt::Display for NormMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormMode::Conditional => "conditional",
            NormMode::RowSum => "row_sum",
        })
    }
}

impl FromStr for NormMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "conditional" => Ok(NormMode::Conditional),
            "row_sum" | "rowsum" => Ok(NormMode::RowSum),
            other => Err(format!("unknown normalization mode {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub anchor: String,
    pub mode: NormMode,
    pub values: Vec<f64>,
    /// Set when the anchor never occurs (or has no co-occurrences under
    /// `row_sum`); `values` is then all zero.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub class: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub anchor: String,
    pub mode: NormMode,
    pub entries: Vec<RankEntry>,
}

impl Ranking {
    pub fn classes(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.class.as_str()).collect()
    }
}

impl CooccurrenceMatrix {
    fn off_diagonal_sum(&self, i: usize) -> u64 {
        self.row(i).iter().sum::<u64>() - self.count(i, i)
    }

    /// Denominator applied to row `i` under `mode`; zero means degenerate.
    fn denominator(&self, i: usize, mode: NormMode) -> u64 {
        match mode {
            NormMode::Conditional => self.anchor_count(i),
            NormMode::RowSum => self.off_diagonal_sum(i),
        }
    }

    /// Exact `P(other | anchor)` as a rational; `None` if the anchor never occurs.
    pub fn exact_conditional(&self, anchor: &str, other: &str) -> Result<Option<Ratio<u64>>, CooccurError> {
        let (i, j) = (self.class_id(anchor)?, self.class_id(other)?);
        let den = self.anchor_count(i);
        if den == 0 || i == j {
            return Ok(if den == 0 { None } else { Some(Ratio::new(0, 1)) });
        }
        Ok(Some(Ratio::new(self.count(i, j), den)))
    }

    pub fn embed(&self, anchor: &str, mode: NormMode) -> Result<EmbeddingVector, CooccurError> {
        let i = self.class_id(anchor)?;
        let den = self.denominator(i, mode);
        let values = if den == 0 {
            vec![0.0; self.n()]
        } else {
            (0..self.n()).map(|j| if j == i { 0.0 } else { self.count(i, j) as f64 / den as f64 }).collect()
        };
        Ok(EmbeddingVector { anchor: anchor.to_string(), mode, values, degenerate: den == 0 })
    }

    /// The `k` classes most likely to co-occur with `anchor`.
    ///
    /// Every mode divides the same integer row by one positive constant, so
    /// the order is decided on raw counts (exact, no float ties) and broken
    /// by ascending vocabulary index. Zero-score classes are never returned.
    pub fn top_k(&self, anchor: &str, k: usize, mode: NormMode, exclude: &[&str]) -> Result<Ranking, CooccurError> {
        if k == 0 {
            return Err(CooccurError::InvalidK);
        }
        let i = self.class_id(anchor)?;
        let mut excluded = vec![false; self.n()];
        for e in exclude {
            if let Some(j) = self.vocab.index_of(e) {
                excluded[j] = true;
            }
        }
        let den = self.denominator(i, mode);
        let mut order: Vec<usize> = (0..self.n()).filter(|&j| j != i && !excluded[j] && self.count(i, j) > 0).collect();
        order.sort_by(|&a, &b| self.count(i, b).cmp(&self.count(i, a)).then(a.cmp(&b)));
        order.truncate(k);
        let entries = order
            .into_iter()
            .map(|j| RankEntry { class: self.vocab.name(j).to_string(), score: self.count(i, j) as f64 / den as f64 })
            .collect();
        Ok(Ranking { anchor: anchor.to_string(), mode, entries })
    }
}
