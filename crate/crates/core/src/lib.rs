//! Human-steered recommendation of micro-scale urban interventions.
//!
//! The pipeline runs in stages, each behind its own module:
//!
//! * [`ingest`]: detection files to [`ingest::Scene`]s, vocabulary
//!   canonicalization and the two-stage activity filter.
//! * [`cooccur`]: scene-level co-occurrence counts, conditional embeddings
//!   and top-k complement rankings.
//! * [`recommend`]: statistical complements, the vision-language prompt,
//!   candidate parsing and feasibility filtering.
//! * [`mesh`]: text-to-3D briefs, OBJ normalization and LOD decimation.
//! * [`service`]: the event-sourced session workflow and its HTTP API.
//! * [`cli`]: batch entry points used by the `urbantactic` binary.

pub mod cli;
pub mod config;
pub mod cooccur;
pub mod ingest;
pub mod mesh;
pub mod provider;
pub mod recommend;
pub mod service;

pub use cooccur::{CooccurrenceMatrix, NormMode, Ranking};
pub use ingest::{Detection, FilterPolicy, Scene, Vocabulary};
