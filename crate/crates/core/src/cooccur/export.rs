use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{CooccurError, CooccurrenceMatrix, NormMode};
use crate::ingest::Vocabulary;

const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportForm {
    Counts,
    Conditional,
    RowSum,
}

impl FromStr for ExportForm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "counts" => Ok(ExportForm::Counts),
            other => match other.parse::<NormMode>()? {
                NormMode::Conditional => Ok(ExportForm::Conditional),
                NormMode::RowSum => Ok(ExportForm::RowSum),
            },
        }
    }
}

impl fmt::Display for ExportForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExportForm::Counts => "counts",
            ExportForm::Conditional => "conditional",
            ExportForm::RowSum => "row_sum",
        })
    }
}

/// A square table with class names along both axes, as written to CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixTable {
    pub form: ExportForm,
    pub classes: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl MatrixTable {
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(vec![]);
        let mut header = vec![String::new()];
        header.extend(self.classes.iter().cloned());
        w.write_record(&header).expect("in-memory write");
        for (class, row) in self.classes.iter().zip(&self.values) {
            let mut rec = vec![class.clone()];
            rec.extend(row.iter().map(|&v| match self.form {
                ExportForm::Counts => format!("{}", v as u64),
                _ => format!("{v:.6}"),
            }));
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    pub fn parse_csv(text: &str, form: ExportForm) -> Result<Self, CooccurError> {
        let bad = |m: String| CooccurError::Table(m);
        let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(text.as_bytes());
        let mut records = r.records();
        let header = records.next().ok_or_else(|| bad("empty table".into()))?.map_err(|e| bad(e.to_string()))?;
        let classes: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut values = Vec::with_capacity(classes.len());
        for (ri, rec) in records.enumerate() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            if rec.get(0) != classes.get(ri).map(String::as_str) {
                return Err(bad(format!("row {ri} label does not match header")));
            }
            let row = rec
                .iter()
                .skip(1)
                .map(|c| c.parse::<f64>().map_err(|e| bad(format!("row {ri}: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            if row.len() != classes.len() {
                return Err(bad(format!("row {ri} has {} cells", row.len())));
            }
            values.push(row);
        }
        if values.len() != classes.len() {
            return Err(bad("table is not square".into()));
        }
        Ok(MatrixTable { form, classes, values })
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixSnapshot {
    format_version: u32,
    vocab: Vocabulary,
    vocab_hash: String,
    counts: Vec<Vec<u64>>,
    anchor_counts: Vec<u64>,
    scenes_processed: u64,
}

impl CooccurrenceMatrix {
    pub fn table(&self, form: ExportForm) -> MatrixTable {
        let values = (0..self.n())
            .map(|i| match form {
                ExportForm::Counts => self.row(i).iter().map(|&c| c as f64).collect(),
                ExportForm::Conditional => self.embed_row(i, NormMode::Conditional),
                ExportForm::RowSum => self.embed_row(i, NormMode::RowSum),
            })
            .collect();
        MatrixTable { form, classes: self.vocab.classes().to_vec(), values }
    }

    fn embed_row(&self, i: usize, mode: NormMode) -> Vec<f64> {
        self.embed(self.vocab.name(i), mode).expect("class from own vocabulary").values
    }

    /// CSV with class names on both axes: integers for counts, six decimals otherwise.
    pub fn export_csv(&self, form: ExportForm) -> String {
        self.table(form).to_csv()
    }

    pub fn to_snapshot_json(&self) -> String {
        let snap = MatrixSnapshot {
            format_version: SNAPSHOT_VERSION,
            vocab: (*self.vocab).clone(),
            vocab_hash: self.vocab.content_hash(),
            counts: self.rows(),
            anchor_counts: self.anchor_counts.clone(),
            scenes_processed: self.scenes_processed,
        };
        serde_json::to_string_pretty(&snap).expect("snapshot serializes")
    }

    /// Load a snapshot. When `expected` is given, the snapshot must have been
    /// built under that exact vocabulary.
    pub fn from_snapshot_json(text: &str, expected: Option<&Vocabulary>) -> Result<Self, CooccurError> {
        let snap: MatrixSnapshot = serde_json::from_str(text).map_err(|e| CooccurError::Snapshot(e.to_string()))?;
        if snap.format_version != SNAPSHOT_VERSION {
            return Err(CooccurError::Snapshot(format!("unsupported format version {}", snap.format_version)));
        }
        if snap.vocab.content_hash() != snap.vocab_hash {
            return Err(CooccurError::Snapshot("vocab_hash does not match embedded vocabulary".into()));
        }
        if let Some(v) = expected {
            if v.content_hash() != snap.vocab_hash {
                return Err(CooccurError::VocabMismatch);
            }
        }
        Self::from_parts(Arc::new(snap.vocab), snap.counts, snap.anchor_counts, snap.scenes_processed)
    }
}
