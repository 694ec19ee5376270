//! The staged operator workflow as event-sourced sessions, plus the HTTP API
//! that exposes it.
//!
//! Every change to a [`Session`] is a [`DecisionEvent`] passed through
//! [`Session::apply`]; folding a session's log from its creation event
//! reproduces it exactly.

pub mod api;
mod jobs;
mod session;
mod store;

use thiserror::Error;

use crate::recommend::{RecommendError, SuggestionStatus};

pub use jobs::{AssetRecord, JobStatus, JobTable, WorkerPool};
pub use session::{merge_reprompt, AssetLink, DecisionEvent, EventKind, Placement, Session, SessionState};
pub use store::{
    Clock, Decision, FixedClock, SceneRef, ServiceContext, SessionDocument, SessionStore, SessionView, SystemClock,
    DOCUMENT_VERSION,
};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown scene {0:?}")]
    UnknownScene(String),
    #[error("unknown session {0:?}")]
    UnknownSession(String),
    #[error("unknown asset {0:?}")]
    UnknownAsset(String),
    #[error("{op} is not allowed in state {state}")]
    InvalidState { op: String, state: SessionState },
    #[error("{0:?} is not a vocabulary class")]
    UnknownClass(String),
    #[error("anchor {0:?} is not detected in the scene")]
    AnchorNotInScene(String),
    #[error("{0:?} is not one of the offered complements")]
    NotAnOption(String),
    #[error("no open candidate with rank {0}")]
    UnknownCandidate(u32),
    #[error("candidate {rank} is already {status:?}")]
    AlreadyDecided { rank: u32, status: SuggestionStatus },
    #[error("asset {0:?} is not ready")]
    AssetNotReady(String),
    #[error("invalid placement: {0}")]
    InvalidPlacement(String),
    #[error("invalid event: {0}")]
    InvalidEvent(String),
    #[error(transparent)]
    Recommend(#[from] RecommendError),
    #[error("decision log of {0:?} does not fold to its snapshot")]
    ReplayMismatch(String),
    #[error("invalid session document: {0}")]
    InvalidDocument(String),
    #[error("session {0:?} already exists")]
    SessionExists(String),
    #[error("invalid request: {0}")]
    BadRequest(String),
}

impl ServiceError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        use ServiceError::*;
        match self {
            UnknownScene(_) => "unknown_scene",
            UnknownSession(_) => "unknown_session",
            UnknownAsset(_) => "unknown_asset",
            InvalidState { .. } => "invalid_state",
            UnknownClass(_) => "unknown_class",
            AnchorNotInScene(_) => "anchor_not_in_scene",
            NotAnOption(_) => "not_an_option",
            UnknownCandidate(_) => "unknown_candidate",
            AlreadyDecided { .. } => "already_decided",
            AssetNotReady(_) => "asset_not_ready",
            InvalidPlacement(_) => "invalid_placement",
            InvalidEvent(_) => "invalid_event",
            Recommend(RecommendError::Provider(_)) => "provider_error",
            Recommend(RecommendError::MalformedResponse(_) | RecommendError::TooFewCandidates { .. }) => {
                "malformed_response"
            }
            Recommend(RecommendError::ImageDecode(_)) => "image_unavailable",
            Recommend(_) => "recommend_error",
            ReplayMismatch(_) => "replay_mismatch",
            InvalidDocument(_) => "invalid_document",
            SessionExists(_) => "session_exists",
            BadRequest(_) => "bad_request",
        }
    }

    pub fn http_status(&self) -> u16 {
        use ServiceError::*;
        match self {
            UnknownScene(_) | UnknownSession(_) | UnknownAsset(_) => 404,
            InvalidState { .. } | AlreadyDecided { .. } | AssetNotReady(_) | SessionExists(_) => 409,
            Recommend(RecommendError::Provider(_))
            | Recommend(RecommendError::MalformedResponse(_))
            | Recommend(RecommendError::TooFewCandidates { .. }) => 502,
            BadRequest(_) => 400,
            _ => 422,
        }
    }

    /// Where the problem is, when that is more specific than the message.
    pub fn locus(&self) -> Option<String> {
        use ServiceError::*;
        match self {
            UnknownCandidate(rank) | AlreadyDecided { rank, .. } => Some(format!("rank {rank}")),
            AssetNotReady(id) | UnknownAsset(id) => Some(format!("asset {id}")),
            _ => None,
        }
    }
}
