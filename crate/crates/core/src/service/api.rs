//! HTTP JSON routes over a [`SessionStore`].

use std::collections::BTreeSet;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use super::{Decision, Placement, ServiceError, SessionDocument, SessionStore, SessionView};
use crate::ingest::{ContextTag, Detection, Scene};
use crate::mesh::{read_lod, Lod};

type AppState = Arc<SessionStore>;

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub locus: Option<String>,
}

pub struct ApiError(pub ServiceError);

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.0.http_status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        let body = ErrorBody { code: self.0.code().into(), message: self.0.to_string(), locus: self.0.locus() };
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Store operations may call blocking providers; keep them off the async workers.
async fn blocking<T, F>(f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce() -> Result<T, ServiceError> + Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError(ServiceError::BadRequest(format!("worker failed: {e}"))))?
        .map_err(ApiError)
}

fn parse<T: for<'de> Deserialize<'de>>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError(ServiceError::BadRequest(e.to_string())))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SceneListing {
    pub scene_id: String,
    pub scene_category: String,
    pub context_tags: BTreeSet<ContextTag>,
    pub classes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_url: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SceneDetail {
    pub scene_id: String,
    pub scene_category: String,
    pub context_tags: BTreeSet<ContextTag>,
    pub detections: Vec<Detection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_url: Option<String>,
}

fn image_url(s: &Scene) -> Option<String> {
    s.image_uri.as_ref().map(|_| format!("/scenes/{}/image", s.scene_id))
}

async fn list_scenes(State(store): State<AppState>) -> Json<Vec<SceneListing>> {
    Json(
        store
            .context()
            .scenes
            .iter()
            .map(|s| SceneListing {
                scene_id: s.scene_id.clone(),
                scene_category: s.scene_category.clone(),
                context_tags: s.context_tags.clone(),
                classes: s.classes().into_iter().map(str::to_string).collect(),
                image_url: image_url(s),
            })
            .collect(),
    )
}

fn find_scene<'a>(store: &'a SessionStore, id: &str) -> ApiResult<&'a Scene> {
    store.context().scene(id).ok_or_else(|| ApiError(ServiceError::UnknownScene(id.into())))
}

async fn get_scene(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<SceneDetail>> {
    let s = find_scene(&store, &id)?;
    Ok(Json(SceneDetail {
        scene_id: s.scene_id.clone(),
        scene_category: s.scene_category.clone(),
        context_tags: s.context_tags.clone(),
        detections: s.detections.clone(),
        image_url: image_url(s),
    }))
}

async fn get_scene_image(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let s = find_scene(&store, &id)?;
    let missing = || ApiError(ServiceError::UnknownAsset(format!("image of scene {id}")));
    let path = store.context().image_path(s).ok_or_else(missing)?;
    let bytes = tokio::fs::read(&path).await.map_err(|_| missing())?;
    let mime = match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("png") => "image/png",
        Some("jpg" | "jpeg") => "image/jpeg",
        _ => "application/octet-stream",
    };
    Ok(([(header::CONTENT_TYPE, mime)], bytes).into_response())
}

#[derive(Deserialize)]
struct CreateBody {
    scene_id: String,
}

async fn create_session(State(store): State<AppState>, body: Bytes) -> ApiResult<(StatusCode, Json<SessionView>)> {
    let b: CreateBody = parse(&body)?;
    let view = blocking(move || store.create_session(&b.scene_id).map(|s| store.view(s))).await?;
    Ok((StatusCode::CREATED, Json(view)))
}

async fn get_session(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<SessionView>> {
    let s = store.get(&id)?;
    Ok(Json(store.view(s)))
}

#[derive(Deserialize)]
struct AnchorBody {
    anchor: String,
}

async fn set_anchor(
    State(store): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<SessionView>> {
    let b: AnchorBody = parse(&body)?;
    Ok(Json(blocking(move || store.set_anchor(&id, &b.anchor).map(|s| store.view(s))).await?))
}

#[derive(Deserialize)]
struct PairBody {
    co_object: String,
    #[serde(default, rename = "override")]
    override_: bool,
}

async fn choose_pair(
    State(store): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<SessionView>> {
    let b: PairBody = parse(&body)?;
    Ok(Json(blocking(move || store.choose_pair(&id, &b.co_object, b.override_).map(|s| store.view(s))).await?))
}

async fn fetch_candidates(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<SessionView>> {
    Ok(Json(blocking(move || store.fetch_candidates(&id).map(|s| store.view(s))).await?))
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case")]
enum DecisionKind {
    Accept,
    Reject,
    Complete,
}

#[derive(Deserialize)]
struct DecisionBody {
    decision: DecisionKind,
    #[serde(default)]
    rank: Option<u32>,
}

async fn decide(State(store): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<SessionView>> {
    let b: DecisionBody = parse(&body)?;
    let need_rank = || b.rank.ok_or_else(|| ApiError(ServiceError::BadRequest("rank is required".into())));
    let view = match b.decision {
        DecisionKind::Accept => {
            let rank = need_rank()?;
            blocking(move || store.decide(&id, rank, Decision::Accept).map(|s| store.view(s))).await?
        }
        DecisionKind::Reject => {
            let rank = need_rank()?;
            blocking(move || store.decide(&id, rank, Decision::Reject).map(|s| store.view(s))).await?
        }
        DecisionKind::Complete => blocking(move || store.complete(&id).map(|s| store.view(s))).await?,
    };
    Ok(Json(view))
}

async fn place(State(store): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<SessionView>> {
    let p: Placement = parse(&body)?;
    Ok(Json(blocking(move || store.place_asset(&id, p).map(|s| store.view(s))).await?))
}

async fn export(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let doc = store.export(&id)?;
    Ok(([(header::CONTENT_TYPE, "application/json")], doc.to_json()).into_response())
}

async fn import(State(store): State<AppState>, body: Bytes) -> ApiResult<(StatusCode, Json<SessionView>)> {
    let text = std::str::from_utf8(&body).map_err(|e| ApiError(ServiceError::BadRequest(e.to_string())))?;
    let doc = SessionDocument::from_json(text)?;
    let view = blocking(move || store.import(doc).map(|s| store.view(s))).await?;
    Ok((StatusCode::CREATED, Json(view)))
}

async fn asset_file(State(store): State<AppState>, Path((id, file)): Path<(String, String)>) -> ApiResult<Response> {
    let lod: Lod = file
        .strip_suffix(".obj")
        .and_then(|l| l.parse().ok())
        .ok_or_else(|| ApiError(ServiceError::UnknownAsset(format!("{id}/{file}"))))?;
    let record = store.jobs().get(&id).ok_or_else(|| ApiError(ServiceError::UnknownAsset(id.clone())))?;
    if record.status != super::JobStatus::Ready {
        return Err(ApiError(ServiceError::AssetNotReady(id)));
    }
    let text = read_lod(&store.context().assets_dir, &id, lod)
        .map_err(|_| ApiError(ServiceError::UnknownAsset(format!("{id}/{file}"))))?;
    Ok(([(header::CONTENT_TYPE, "model/obj")], text).into_response())
}

pub fn router(store: Arc<SessionStore>) -> Router {
    Router::new()
        .route("/scenes", get(list_scenes))
        .route("/scenes/{id}", get(get_scene))
        .route("/scenes/{id}/image", get(get_scene_image))
        .route("/sessions", post(create_session))
        .route("/sessions/import", post(import))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/anchor", post(set_anchor))
        .route("/sessions/{id}/pair", post(choose_pair))
        .route("/sessions/{id}/candidates", post(fetch_candidates))
        .route("/sessions/{id}/decisions", post(decide))
        .route("/sessions/{id}/placements", post(place))
        .route("/sessions/{id}/export", get(export))
        .route("/assets/{id}/{file}", get(asset_file))
        .with_state(store)
}

/// Serve until Ctrl-C.
pub async fn serve(store: Arc<SessionStore>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(store))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
