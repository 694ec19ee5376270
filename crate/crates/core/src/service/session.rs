use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ServiceError;
use crate::recommend::{Provenance, Suggestion, SuggestionStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    Created,
    AnchorSet,
    PairSet,
    CandidatesReady,
    Completed,
}

impl SessionState {
    pub fn as_str(self) -> &'static str {
        match self {
            SessionState::Created => "created",
            SessionState::AnchorSet => "anchor_set",
            SessionState::PairSet => "pair_set",
            SessionState::CandidatesReady => "candidates_ready",
            SessionState::Completed => "completed",
        }
    }
}

impl fmt::Display for SessionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where an asset sits on the scene image: `(x, z)` in normalized image
/// coordinates on the ground plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub asset_id: String,
    pub position: [f64; 2],
    #[serde(default)]
    pub rotation_y: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale_override: Option<f64>,
}

impl Placement {
    pub fn validate(&self) -> Result<(), ServiceError> {
        if !self.position.iter().all(|c| (0.0..=1.0).contains(c)) {
            return Err(ServiceError::InvalidPlacement(format!("position {:?} outside [0, 1]", self.position)));
        }
        if !self.rotation_y.is_finite() {
            return Err(ServiceError::InvalidPlacement("rotation_y must be finite".into()));
        }
        if let Some(s) = self.scale_override {
            if !(s.is_finite() && s > 0.0) {
                return Err(ServiceError::InvalidPlacement(format!("scale_override {s} must be positive")));
            }
        }
        Ok(())
    }
}

/// An accepted candidate and the asset generated for it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssetLink {
    pub asset_id: String,
    pub object_name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum EventKind {
    Created {
        session_id: String,
        scene_id: String,
    },
    SetAnchor {
        anchor: String,
        options: Vec<Suggestion>,
    },
    ChoosePair {
        co_object: String,
        #[serde(rename = "override")]
        override_: bool,
    },
    ReceiveCandidates {
        candidates: Vec<Suggestion>,
        retries: u32,
    },
    /// Carries the complete merged list that replaces the current one.
    Reprompt {
        candidates: Vec<Suggestion>,
        retries: u32,
    },
    Accept {
        rank: u32,
        asset_id: String,
    },
    Reject {
        rank: u32,
    },
    Place {
        placement: Placement,
    },
    Complete {},
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::Created { .. } => "created",
            EventKind::SetAnchor { .. } => "set_anchor",
            EventKind::ChoosePair { .. } => "choose_pair",
            EventKind::ReceiveCandidates { .. } => "receive_candidates",
            EventKind::Reprompt { .. } => "reprompt",
            EventKind::Accept { .. } => "accept",
            EventKind::Reject { .. } => "reject",
            EventKind::Place { .. } => "place",
            EventKind::Complete {} => "complete",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionEvent {
    pub seq: u64,
    pub at: String,
    #[serde(flatten)]
    pub event: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    pub scene_id: String,
    pub state: SessionState,
    pub anchor: Option<String>,
    pub co_object: Option<String>,
    pub statistical_options: Vec<Suggestion>,
    pub semantic_candidates: Vec<Suggestion>,
    pub assets: Vec<AssetLink>,
    pub placements: Vec<Placement>,
    pub decision_log: Vec<DecisionEvent>,
    pub created_at: String,
    pub updated_at: String,
}

fn sequential_ranks(list: &[Suggestion]) -> Result<(), ServiceError> {
    for (s, expect) in list.iter().zip(1u32..) {
        if s.rank != expect {
            return Err(ServiceError::InvalidEvent(format!(
                "candidate {:?} has rank {} where {expect} was expected",
                s.object_name, s.rank
            )));
        }
    }
    Ok(())
}

fn decided(s: &Suggestion) -> bool {
    matches!(s.status, SuggestionStatus::Accepted | SuggestionStatus::Rejected)
}

impl Session {
    /// Start a session from its creation event.
    pub fn start(event: DecisionEvent) -> Result<Session, ServiceError> {
        let EventKind::Created { session_id, scene_id } = &event.event else {
            return Err(ServiceError::InvalidEvent(format!(
                "log must start with a created event, found {}",
                event.event.name()
            )));
        };
        if event.seq != 1 {
            return Err(ServiceError::InvalidEvent(format!("first event has seq {}", event.seq)));
        }
        Ok(Session {
            session_id: session_id.clone(),
            scene_id: scene_id.clone(),
            state: SessionState::Created,
            anchor: None,
            co_object: None,
            statistical_options: Vec::new(),
            semantic_candidates: Vec::new(),
            assets: Vec::new(),
            placements: Vec::new(),
            created_at: event.at.clone(),
            updated_at: event.at.clone(),
            decision_log: vec![event],
        })
    }

    /// Fold a decision log from its creation event.
    pub fn replay(log: &[DecisionEvent]) -> Result<Session, ServiceError> {
        let (first, rest) = log.split_first().ok_or_else(|| ServiceError::InvalidEvent("empty decision log".into()))?;
        let mut s = Session::start(first.clone())?;
        for e in rest {
            s.apply(e.clone())?;
        }
        Ok(s)
    }

    pub fn next_seq(&self) -> u64 {
        self.decision_log.last().map_or(1, |e| e.seq + 1)
    }

    pub fn event(&self, kind: EventKind, at: String) -> DecisionEvent {
        DecisionEvent { seq: self.next_seq(), at, event: kind }
    }

    pub fn next_asset_id(&self) -> String {
        format!("{}-a{}", self.session_id, self.assets.len() + 1)
    }

    pub fn candidate(&self, rank: u32) -> Option<&Suggestion> {
        self.semantic_candidates.iter().find(|s| s.rank == rank)
    }

    pub fn require(&self, op: &str, states: &[SessionState]) -> Result<(), ServiceError> {
        if states.contains(&self.state) {
            Ok(())
        } else {
            Err(ServiceError::InvalidState { op: op.to_string(), state: self.state })
        }
    }

    /// A candidate that may still be decided.
    pub fn proposed_candidate(&self, rank: u32) -> Result<&Suggestion, ServiceError> {
        let c = self.candidate(rank).ok_or(ServiceError::UnknownCandidate(rank))?;
        match c.status {
            SuggestionStatus::Proposed => Ok(c),
            SuggestionStatus::Filtered => Err(ServiceError::UnknownCandidate(rank)),
            status => Err(ServiceError::AlreadyDecided { rank, status }),
        }
    }

    /// Check that `event` may follow the current state, without changing anything.
    pub fn check(&self, event: &DecisionEvent) -> Result<(), ServiceError> {
        use SessionState::*;
        if event.seq != self.next_seq() {
            return Err(ServiceError::InvalidEvent(format!(
                "event seq {} where {} was expected",
                event.seq,
                self.next_seq()
            )));
        }
        let op = event.event.name();
        match &event.event {
            EventKind::Created { .. } => return Err(ServiceError::InvalidEvent("created may only start a log".into())),
            EventKind::SetAnchor { anchor, options } => {
                self.require(op, &[Created])?;
                if anchor.is_empty() {
                    return Err(ServiceError::InvalidEvent("empty anchor".into()));
                }
                if options.iter().any(|o| o.provenance != Provenance::Statistical || o.object_name == *anchor) {
                    return Err(ServiceError::InvalidEvent("options must be statistical complements".into()));
                }
                sequential_ranks(options)?;
            }
            EventKind::ChoosePair { co_object, override_ } => {
                self.require(op, &[AnchorSet])?;
                if Some(co_object) == self.anchor.as_ref() {
                    return Err(ServiceError::NotAnOption(co_object.clone()));
                }
                if !override_ && !self.statistical_options.iter().any(|o| o.object_name == *co_object) {
                    return Err(ServiceError::NotAnOption(co_object.clone()));
                }
            }
            EventKind::ReceiveCandidates { candidates, .. } => {
                self.require(op, &[PairSet])?;
                if candidates.iter().any(decided) {
                    return Err(ServiceError::InvalidEvent("fresh candidates cannot be decided".into()));
                }
                sequential_ranks(candidates)?;
            }
            EventKind::Reprompt { candidates, .. } => {
                self.require(op, &[CandidatesReady])?;
                sequential_ranks(candidates)?;
                for old in self.semantic_candidates.iter().filter(|s| decided(s)) {
                    let kept = candidates.iter().any(|c| {
                        c.object_name == old.object_name && c.description == old.description && c.status == old.status
                    });
                    if !kept {
                        return Err(ServiceError::InvalidEvent(format!(
                            "re-prompt drops decided candidate {:?}",
                            old.object_name
                        )));
                    }
                }
                let decided_new = candidates.iter().filter(|c| decided(c)).count();
                let decided_old = self.semantic_candidates.iter().filter(|c| decided(c)).count();
                if decided_new != decided_old {
                    return Err(ServiceError::InvalidEvent("re-prompt cannot decide candidates".into()));
                }
            }
            EventKind::Accept { rank, asset_id } => {
                self.require(op, &[CandidatesReady])?;
                self.proposed_candidate(*rank)?;
                if self.assets.iter().any(|a| a.asset_id == *asset_id) {
                    return Err(ServiceError::InvalidEvent(format!("asset id {asset_id} already used")));
                }
            }
            EventKind::Reject { rank } => {
                self.require(op, &[CandidatesReady])?;
                self.proposed_candidate(*rank)?;
            }
            EventKind::Place { placement } => {
                self.require(op, &[CandidatesReady])?;
                placement.validate()?;
                if !self.assets.iter().any(|a| a.asset_id == placement.asset_id) {
                    return Err(ServiceError::UnknownAsset(placement.asset_id.clone()));
                }
            }
            EventKind::Complete {} => self.require(op, &[CandidatesReady])?,
        }
        Ok(())
    }

    /// The only mutator: validate `event`, then fold it in and log it.
    pub fn apply(&mut self, event: DecisionEvent) -> Result<(), ServiceError> {
        self.check(&event)?;
        match &event.event {
            EventKind::Created { .. } => unreachable!("rejected by check"),
            EventKind::SetAnchor { anchor, options } => {
                self.anchor = Some(anchor.clone());
                self.statistical_options = options.clone();
                self.state = SessionState::AnchorSet;
            }
            EventKind::ChoosePair { co_object, .. } => {
                self.co_object = Some(co_object.clone());
                self.state = SessionState::PairSet;
            }
            EventKind::ReceiveCandidates { candidates, .. } | EventKind::Reprompt { candidates, .. } => {
                self.semantic_candidates = candidates.clone();
                self.state = SessionState::CandidatesReady;
            }
            EventKind::Accept { rank, asset_id } => {
                let c = self.semantic_candidates.iter_mut().find(|s| s.rank == *rank).expect("checked");
                c.status = SuggestionStatus::Accepted;
                let object_name = c.object_name.clone();
                self.assets.push(AssetLink { asset_id: asset_id.clone(), object_name });
            }
            EventKind::Reject { rank } => {
                let c = self.semantic_candidates.iter_mut().find(|s| s.rank == *rank).expect("checked");
                c.status = SuggestionStatus::Rejected;
            }
            EventKind::Place { placement } => {
                match self.placements.iter_mut().find(|p| p.asset_id == placement.asset_id) {
                    Some(p) => *p = placement.clone(),
                    None => self.placements.push(placement.clone()),
                }
            }
            EventKind::Complete {} => self.state = SessionState::Completed,
        }
        self.updated_at = event.at.clone();
        self.decision_log.push(event);
        Ok(())
    }

    /// SHA-256 over the canonical JSON form.
    pub fn state_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("session serializes");
        Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Combine a fresh batch with the current candidates for a re-prompt.
///
/// Decided candidates keep their place at the front. Fresh proposals
/// follow, then fresh entries that were filtered. Ranks are reassigned.
pub fn merge_reprompt(current: &[Suggestion], fresh: Vec<Suggestion>) -> Vec<Suggestion> {
    let kept = current.iter().filter(|s| decided(s)).cloned();
    let (filtered, proposed): (Vec<_>, Vec<_>) =
        fresh.into_iter().partition(|s| s.status == SuggestionStatus::Filtered);
    kept.chain(proposed)
        .chain(filtered)
        .zip(1u32..)
        .map(|(mut s, rank)| {
            s.rank = rank;
            s
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(n: u64) -> String {
        format!("2024-01-01T00:00:{n:02}Z")
    }

    fn created() -> Session {
        Session::start(DecisionEvent {
            seq: 1,
            at: at(0),
            event: EventKind::Created { session_id: "sess-000001".into(), scene_id: "scene2".into() },
        })
        .unwrap()
    }

    fn push(s: &mut Session, kind: EventKind) -> Result<(), ServiceError> {
        let e = s.event(kind, at(s.next_seq()));
        s.apply(e)
    }

    fn options() -> Vec<Suggestion> {
        ["window", "tree", "sign"].iter().zip(1..).map(|(n, r)| Suggestion::statistical(*n, r)).collect()
    }

    fn batch(names: &[&str]) -> Vec<Suggestion> {
        names.iter().zip(1..).map(|(n, r)| Suggestion::semantic(*n, format!("{n} desc"), r)).collect()
    }

    fn ready() -> Session {
        let mut s = created();
        push(&mut s, EventKind::SetAnchor { anchor: "bench".into(), options: options() }).unwrap();
        push(&mut s, EventKind::ChoosePair { co_object: "tree".into(), override_: false }).unwrap();
        push(&mut s, EventKind::ReceiveCandidates { candidates: batch(&["A", "B", "C", "D", "E"]), retries: 0 })
            .unwrap();
        s
    }

    #[test]
    fn happy_path_and_replay() {
        let mut s = ready();
        assert_eq!(s.state, SessionState::CandidatesReady);
        let id = s.next_asset_id();
        push(&mut s, EventKind::Accept { rank: 2, asset_id: id }).unwrap();
        push(&mut s, EventKind::Reject { rank: 1 }).unwrap();
        let p = Placement {
            asset_id: "sess-000001-a1".into(),
            position: [0.5, 0.5],
            rotation_y: 90.0,
            scale_override: None,
        };
        push(&mut s, EventKind::Place { placement: p.clone() }).unwrap();
        push(&mut s, EventKind::Place { placement: Placement { rotation_y: 45.0, ..p } }).unwrap();
        assert_eq!(s.placements.len(), 1);
        assert_eq!(s.placements[0].rotation_y, 45.0);
        push(&mut s, EventKind::Complete {}).unwrap();
        assert_eq!(s.state, SessionState::Completed);
        let again = Session::replay(&s.decision_log).unwrap();
        assert_eq!(again, s);
        assert_eq!(again.state_hash(), s.state_hash());
        assert_eq!(s.updated_at, at(9));
    }

    #[test]
    fn state_machine_guards() {
        let mut s = created();
        push(&mut s, EventKind::SetAnchor { anchor: "bench".into(), options: options() }).unwrap();
        let before = s.clone();
        let err = push(&mut s, EventKind::SetAnchor { anchor: "bench".into(), options: options() }).unwrap_err();
        assert!(matches!(err, ServiceError::InvalidState { .. }));
        let err = push(&mut s, EventKind::ChoosePair { co_object: "lamp".into(), override_: false }).unwrap_err();
        assert!(matches!(err, ServiceError::NotAnOption(_)));
        assert_eq!(s, before);
        push(&mut s, EventKind::ChoosePair { co_object: "lamp".into(), override_: true }).unwrap();
        assert_eq!(s.co_object.as_deref(), Some("lamp"));
    }

    #[test]
    fn decisions_are_final() {
        let mut s = ready();
        push(&mut s, EventKind::Reject { rank: 3 }).unwrap();
        let err = push(&mut s, EventKind::Accept { rank: 3, asset_id: "x".into() }).unwrap_err();
        assert!(matches!(err, ServiceError::AlreadyDecided { rank: 3, status: SuggestionStatus::Rejected }));
        assert!(matches!(push(&mut s, EventKind::Reject { rank: 9 }), Err(ServiceError::UnknownCandidate(9))));
    }

    #[test]
    fn filtered_candidates_cannot_be_decided() {
        let mut s = created();
        push(&mut s, EventKind::SetAnchor { anchor: "bench".into(), options: options() }).unwrap();
        push(&mut s, EventKind::ChoosePair { co_object: "tree".into(), override_: false }).unwrap();
        let mut c = batch(&["A", "Crosswalk"]);
        c[1].status = SuggestionStatus::Filtered;
        push(&mut s, EventKind::ReceiveCandidates { candidates: c, retries: 0 }).unwrap();
        assert!(matches!(
            push(&mut s, EventKind::Accept { rank: 2, asset_id: "x".into() }),
            Err(ServiceError::UnknownCandidate(2))
        ));
    }

    #[test]
    fn reprompt_preserves_decisions() {
        let mut s = ready();
        push(&mut s, EventKind::Accept { rank: 4, asset_id: "sess-000001-a1".into() }).unwrap();
        push(&mut s, EventKind::Reject { rank: 5 }).unwrap();
        let merged = merge_reprompt(&s.semantic_candidates, batch(&["F", "G", "H", "I", "J"]));
        let names: Vec<_> = merged.iter().map(|c| c.object_name.as_str()).collect();
        assert_eq!(names, ["D", "E", "F", "G", "H", "I", "J"]);
        assert_eq!(merged[0].status, SuggestionStatus::Accepted);
        push(&mut s, EventKind::Reprompt { candidates: merged, retries: 1 }).unwrap();
        assert_eq!(s.state, SessionState::CandidatesReady);

        let bad = batch(&["X", "Y"]);
        assert!(matches!(
            push(&mut s, EventKind::Reprompt { candidates: bad, retries: 0 }),
            Err(ServiceError::InvalidEvent(_))
        ));
    }

    #[test]
    fn bad_logs_are_rejected() {
        let s = ready();
        let mut log = s.decision_log.clone();
        log[2].seq = 7;
        assert!(Session::replay(&log).is_err());
        assert!(Session::replay(&s.decision_log[1..]).is_err());
        assert!(Session::replay(&[]).is_err());
    }

    #[test]
    fn event_json_shape() {
        let e = DecisionEvent {
            seq: 3,
            at: at(3),
            event: EventKind::ChoosePair { co_object: "tree".into(), override_: true },
        };
        let v: serde_json::Value = serde_json::to_value(&e).unwrap();
        assert_eq!(v["kind"], "choose_pair");
        assert_eq!(v["payload"]["override"], true);
        assert_eq!(serde_json::from_value::<DecisionEvent>(v).unwrap(), e);
        let c = DecisionEvent { seq: 9, at: at(9), event: EventKind::Complete {} };
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<DecisionEvent>(&text).unwrap(), c);
    }

    #[test]
    fn placement_bounds() {
        let p = Placement { asset_id: "a".into(), position: [1.2, 0.5], rotation_y: 0.0, scale_override: None };
        assert!(p.validate().is_err());
        let p = Placement { position: [0.0, 1.0], scale_override: Some(0.0), ..p };
        assert!(p.validate().is_err());
    }
}
