use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};

use super::jobs::{AssetRecord, JobStatus, JobTable, WorkerPool};
use super::session::{merge_reprompt, DecisionEvent, EventKind, Placement, Session, SessionState};
use super::ServiceError;
use crate::cooccur::CooccurrenceMatrix;
use crate::ingest::{Scene, Vocabulary};
use crate::mesh::provider::MeshProvider;
use crate::mesh::{persist, produce_asset, SizeTable, DEFAULT_LOD_TRIANGLES};
use crate::recommend::vlm::VlmProvider;
use crate::recommend::{
    apply_feasibility, build_prompt, load_image, request_semantic_candidates, statistical_candidates, summarize_scene,
    suppress_duplicates, FeasibilityRule, RecommendError, SemanticOptions, Suggestion, SuggestionStatus,
};

/// Source of event timestamps.
pub trait Clock: Send + Sync {
    fn now(&self) -> String;
}

pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> String {
        chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
    }
}

/// Always the same instant; makes runs reproducible.
pub struct FixedClock(pub String);

impl Clock for FixedClock {
    fn now(&self) -> String {
        self.0.clone()
    }
}

/// Everything a session needs besides its own state.
pub struct ServiceContext {
    /// Eligible scenes (already through the activity filter).
    pub scenes: Vec<Scene>,
    /// Directory that relative image locators resolve against.
    pub image_root: PathBuf,
    pub vocab: Arc<Vocabulary>,
    pub matrix: Arc<CooccurrenceMatrix>,
    pub vlm: Arc<dyn VlmProvider>,
    pub mesh: Arc<dyn MeshProvider>,
    pub rules: Vec<FeasibilityRule>,
    pub sizes: SizeTable,
    pub semantic: SemanticOptions,
    pub lod_triangles: usize,
    pub assets_dir: PathBuf,
    /// Classes never offered as statistical complements.
    pub option_exclude: Vec<String>,
}

impl ServiceContext {
    pub fn new(
        scenes: Vec<Scene>,
        image_root: PathBuf,
        matrix: Arc<CooccurrenceMatrix>,
        vlm: Arc<dyn VlmProvider>,
        mesh: Arc<dyn MeshProvider>,
        assets_dir: PathBuf,
    ) -> Self {
        ServiceContext {
            scenes,
            image_root,
            vocab: Arc::clone(matrix.vocab()),
            matrix,
            vlm,
            mesh,
            rules: crate::recommend::default_rules(),
            sizes: SizeTable::default(),
            semantic: SemanticOptions::default(),
            lod_triangles: DEFAULT_LOD_TRIANGLES,
            assets_dir,
            option_exclude: vec![crate::ingest::PERSON.to_string()],
        }
    }

    pub fn scene(&self, scene_id: &str) -> Option<&Scene> {
        self.scenes.iter().find(|s| s.scene_id == scene_id)
    }

    pub fn image_path(&self, scene: &Scene) -> Option<PathBuf> {
        let uri = scene.image_uri.as_deref()?;
        let uri = uri.strip_prefix("file://").unwrap_or(uri);
        let p = std::path::Path::new(uri);
        Some(if p.is_absolute() { p.to_path_buf() } else { self.image_root.join(p) })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneRef {
    pub scene_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_uri: Option<String>,
}

pub const DOCUMENT_VERSION: u32 = 1;

/// Portable, re-importable record of one session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionDocument {
    pub format_version: u32,
    pub scene: SceneRef,
    pub session: Session,
    pub assets: Vec<AssetRecord>,
}

impl SessionDocument {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes") + "\n"
    }

    /// Parse and check that the log folds to the stored snapshot.
    pub fn from_json(text: &str) -> Result<Self, ServiceError> {
        let doc: SessionDocument =
            serde_json::from_str(text).map_err(|e| ServiceError::InvalidDocument(e.to_string()))?;
        if doc.format_version != DOCUMENT_VERSION {
            return Err(ServiceError::InvalidDocument(format!(
                "format_version {} (expected {DOCUMENT_VERSION})",
                doc.format_version
            )));
        }
        let folded = Session::replay(&doc.session.decision_log)?;
        if folded != doc.session {
            return Err(ServiceError::ReplayMismatch(doc.session.session_id.clone()));
        }
        if doc.scene.scene_id != doc.session.scene_id {
            return Err(ServiceError::InvalidDocument("scene reference disagrees with session".into()));
        }
        Ok(doc)
    }
}

/// Session state plus the job status of its assets, as returned by the API.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session: Session,
    pub assets: Vec<AssetRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Accept,
    Reject,
}

/// Sessions, their job table and the mesh worker pool.
pub struct SessionStore {
    ctx: Arc<ServiceContext>,
    clock: Arc<dyn Clock>,
    sessions: RwLock<BTreeMap<String, Arc<Mutex<Session>>>>,
    counter: AtomicU64,
    jobs: Arc<JobTable>,
    pool: WorkerPool,
}

impl SessionStore {
    pub fn new(ctx: ServiceContext, clock: Arc<dyn Clock>, workers: usize) -> Self {
        SessionStore {
            ctx: Arc::new(ctx),
            clock,
            sessions: RwLock::new(BTreeMap::new()),
            counter: AtomicU64::new(0),
            jobs: Arc::new(JobTable::default()),
            pool: WorkerPool::new(workers),
        }
    }

    pub fn context(&self) -> &ServiceContext {
        &self.ctx
    }

    pub fn jobs(&self) -> &JobTable {
        &self.jobs
    }

    pub fn wait_idle(&self) {
        self.jobs.wait_idle();
    }

    fn handle(&self, session_id: &str) -> Result<Arc<Mutex<Session>>, ServiceError> {
        self.sessions
            .read()
            .get(session_id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownSession(session_id.to_string()))
    }

    pub fn get(&self, session_id: &str) -> Result<Session, ServiceError> {
        Ok(self.handle(session_id)?.lock().clone())
    }

    pub fn session_ids(&self) -> Vec<String> {
        self.sessions.read().keys().cloned().collect()
    }

    pub fn view(&self, session: Session) -> SessionView {
        SessionView { assets: self.asset_records(&session), session }
    }

    pub fn asset_records(&self, session: &Session) -> Vec<AssetRecord> {
        session
            .assets
            .iter()
            .map(|a| {
                self.jobs.get(&a.asset_id).unwrap_or(AssetRecord {
                    asset_id: a.asset_id.clone(),
                    object_name: a.object_name.clone(),
                    status: JobStatus::Pending,
                    meta: None,
                    error: None,
                })
            })
            .collect()
    }

    /// Lock the session, derive one event from it, and apply the event.
    fn mutate<F>(&self, session_id: &str, derive: F) -> Result<Session, ServiceError>
    where
        F: FnOnce(&Session) -> Result<EventKind, ServiceError>,
    {
        let handle = self.handle(session_id)?;
        let mut session = handle.lock();
        let kind = derive(&session)?;
        let event = session.event(kind, self.clock.now());
        session.apply(event)?;
        Ok(session.clone())
    }

    pub fn create_session(&self, scene_id: &str) -> Result<Session, ServiceError> {
        if self.ctx.scene(scene_id).is_none() {
            return Err(ServiceError::UnknownScene(scene_id.to_string()));
        }
        let mut sessions = self.sessions.write();
        let session_id = loop {
            let n = self.counter.fetch_add(1, Ordering::SeqCst) + 1;
            let id = format!("sess-{n:06}");
            if !sessions.contains_key(&id) {
                break id;
            }
        };
        let event = DecisionEvent {
            seq: 1,
            at: self.clock.now(),
            event: EventKind::Created { session_id: session_id.clone(), scene_id: scene_id.to_string() },
        };
        let session = Session::start(event)?;
        sessions.insert(session_id, Arc::new(Mutex::new(session.clone())));
        Ok(session)
    }

    fn scene_of(&self, session: &Session) -> Result<&Scene, ServiceError> {
        self.ctx.scene(&session.scene_id).ok_or_else(|| ServiceError::UnknownScene(session.scene_id.clone()))
    }

    fn canonical(&self, raw: &str) -> Result<String, ServiceError> {
        self.ctx.vocab.canonicalize(raw).map(str::to_string).ok_or_else(|| ServiceError::UnknownClass(raw.to_string()))
    }

    pub fn set_anchor(&self, session_id: &str, anchor: &str) -> Result<Session, ServiceError> {
        self.mutate(session_id, |s| {
            s.require("set_anchor", &[SessionState::Created])?;
            let anchor = self.canonical(anchor)?;
            if !self.scene_of(s)?.contains_class(&anchor) {
                return Err(ServiceError::AnchorNotInScene(anchor));
            }
            let exclude: Vec<&str> = self.ctx.option_exclude.iter().map(String::as_str).collect();
            let options = statistical_candidates(&self.ctx.matrix, &anchor, &exclude)?;
            Ok(EventKind::SetAnchor { anchor, options })
        })
    }

    pub fn choose_pair(&self, session_id: &str, co_object: &str, override_: bool) -> Result<Session, ServiceError> {
        self.mutate(session_id, |s| {
            s.require("choose_pair", &[SessionState::AnchorSet])?;
            Ok(EventKind::ChoosePair { co_object: self.canonical(co_object)?, override_ })
        })
    }

    /// First fetch, or a re-prompt once candidates exist.
    pub fn fetch_candidates(&self, session_id: &str) -> Result<Session, ServiceError> {
        use SessionState::*;
        self.mutate(session_id, |s| {
            if !matches!(s.state, PairSet | CandidatesReady) {
                return Err(ServiceError::InvalidState { op: "fetch_candidates".into(), state: s.state });
            }
            let scene = self.scene_of(s)?;
            let path = self
                .ctx
                .image_path(scene)
                .ok_or_else(|| RecommendError::ImageDecode(format!("scene {} has no image", scene.scene_id)))?;
            let image = load_image(&path)?;
            let summary = summarize_scene(scene, &image)?;
            let anchor = s.anchor.as_deref().expect("anchor set");
            let co_object = s.co_object.as_deref().expect("pair set");
            let bundle = build_prompt(scene, &summary, anchor, co_object)?;
            let batch = request_semantic_candidates(&bundle, self.ctx.vlm.as_ref(), self.ctx.semantic)?;
            if s.state == PairSet {
                let list = suppress_duplicates(batch.suggestions, &[]);
                let candidates = apply_feasibility(list, scene, &self.ctx.rules);
                Ok(EventKind::ReceiveCandidates { candidates, retries: batch.retries })
            } else {
                let list = suppress_duplicates(batch.suggestions, &s.semantic_candidates);
                let fresh = apply_feasibility(list, scene, &self.ctx.rules);
                Ok(EventKind::Reprompt {
                    candidates: merge_reprompt(&s.semantic_candidates, fresh),
                    retries: batch.retries,
                })
            }
        })
    }

    pub fn decide(&self, session_id: &str, rank: u32, decision: Decision) -> Result<Session, ServiceError> {
        let mut job = None;
        let session = self.mutate(session_id, |s| {
            Ok(match decision {
                Decision::Reject => EventKind::Reject { rank },
                Decision::Accept => {
                    let mut accepted = s.proposed_candidate(rank)?.clone();
                    accepted.status = SuggestionStatus::Accepted;
                    let asset_id = s.next_asset_id();
                    job = Some((asset_id.clone(), accepted));
                    EventKind::Accept { rank, asset_id }
                }
            })
        })?;
        if let Some((asset_id, suggestion)) = job {
            self.queue_mesh_job(asset_id, suggestion);
        }
        Ok(session)
    }

    fn queue_mesh_job(&self, asset_id: String, suggestion: Suggestion) {
        self.jobs.insert(AssetRecord {
            asset_id: asset_id.clone(),
            object_name: suggestion.object_name.clone(),
            status: JobStatus::Pending,
            meta: None,
            error: None,
        });
        let ctx = Arc::clone(&self.ctx);
        let jobs = Arc::clone(&self.jobs);
        self.pool.submit(move || {
            let outcome = produce_asset(&asset_id, &suggestion, &ctx.sizes, ctx.mesh.as_ref(), ctx.lod_triangles)
                .and_then(|a| persist(&ctx.assets_dir, &a))
                .map_err(|e| e.to_string());
            if let Err(e) = &outcome {
                log::warn!("mesh job {asset_id} failed: {e}");
            }
            jobs.finish(&asset_id, outcome);
        });
    }

    pub fn place_asset(&self, session_id: &str, placement: Placement) -> Result<Session, ServiceError> {
        self.mutate(session_id, |s| {
            if !s.assets.iter().any(|a| a.asset_id == placement.asset_id) {
                return Err(ServiceError::UnknownAsset(placement.asset_id.clone()));
            }
            match self.jobs.get(&placement.asset_id) {
                Some(r) if r.status == JobStatus::Ready => Ok(EventKind::Place { placement }),
                _ => Err(ServiceError::AssetNotReady(placement.asset_id.clone())),
            }
        })
    }

    pub fn complete(&self, session_id: &str) -> Result<Session, ServiceError> {
        self.mutate(session_id, |_| Ok(EventKind::Complete {}))
    }

    pub fn export(&self, session_id: &str) -> Result<SessionDocument, ServiceError> {
        let session = self.get(session_id)?;
        let scene = self.scene_of(&session)?;
        Ok(SessionDocument {
            format_version: DOCUMENT_VERSION,
            scene: SceneRef { scene_id: scene.scene_id.clone(), image_uri: scene.image_uri.clone() },
            assets: self.asset_records(&session),
            session,
        })
    }

    /// Register a previously exported session under its original id.
    pub fn import(&self, doc: SessionDocument) -> Result<Session, ServiceError> {
        let folded = Session::replay(&doc.session.decision_log)?;
        if folded != doc.session {
            return Err(ServiceError::ReplayMismatch(doc.session.session_id.clone()));
        }
        let mut sessions = self.sessions.write();
        if sessions.contains_key(&folded.session_id) {
            return Err(ServiceError::SessionExists(folded.session_id));
        }
        for a in doc.assets {
            self.jobs.insert(a);
        }
        sessions.insert(folded.session_id.clone(), Arc::new(Mutex::new(folded.clone())));
        Ok(folded)
    }
}
