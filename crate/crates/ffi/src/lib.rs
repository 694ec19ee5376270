//! C ABI over the urbantactic engine.
//!
//! Conventions:
//! * every fallible call returns a [`UtStatus`]; on failure a message is kept
//!   per thread and read with [`ut_last_error`];
//! * objects cross the boundary as opaque handles freed by their own
//!   `*_free` function;
//! * strings returned through `char **` are owned by the caller and released
//!   with [`ut_string_free`];
//! * structured results (rankings, parsed candidates) are JSON text.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use urbantactic::cooccur::{CooccurError, CooccurrenceMatrix, NormMode};
use urbantactic::ingest::Scene;
use urbantactic::mesh::{decimate, normalize_mesh, Lod, MeshAsset, MeshError, ObjMesh};
use urbantactic::recommend::{build_prompt, load_image, parse_candidate_csv_detailed, summarize_scene, RecommendError};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    ParseError = 4,
    UnknownClass = 5,
    MeshError = 6,
    ImageError = 7,
    Internal = 99,
}

/// Normalization applied to co-occurrence rows.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UtNormMode {
    Conditional = 0,
    RowSum = 1,
}

/// Opaque co-occurrence matrix.
pub struct UtMatrix(CooccurrenceMatrix);

/// Opaque triangle mesh.
pub struct UtMesh(ObjMesh);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

struct Fail(UtStatus, String);

impl From<CooccurError> for Fail {
    fn from(e: CooccurError) -> Self {
        let status = match e {
            CooccurError::UnknownLabel(_) => UtStatus::UnknownClass,
            CooccurError::InvalidK | CooccurError::VocabMismatch => UtStatus::InvalidArgument,
            CooccurError::Snapshot(_) | CooccurError::Table(_) => UtStatus::ParseError,
        };
        Fail(status, e.to_string())
    }
}

impl From<MeshError> for Fail {
    fn from(e: MeshError) -> Self {
        let status = match e {
            MeshError::Parse { .. } => UtStatus::ParseError,
            _ => UtStatus::MeshError,
        };
        Fail(status, e.to_string())
    }
}

impl From<RecommendError> for Fail {
    fn from(e: RecommendError) -> Self {
        let status = match e {
            RecommendError::ImageDecode(_) => UtStatus::ImageError,
            RecommendError::Cooccur(CooccurError::UnknownLabel(_)) => UtStatus::UnknownClass,
            _ => UtStatus::InvalidArgument,
        };
        Fail(status, e.to_string())
    }
}

/// Run `f`, converting errors and panics into a status plus last-error text.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> UtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            UtStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            UtStatus::Internal
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(UtStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|e| Fail(UtStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Fail> {
    let c = CString::new(s).map_err(|_| Fail(UtStatus::Internal, "result contains a NUL byte".into()))?;
    *out = c.into_raw();
    Ok(())
}

fn check_out<T>(out: *mut T) -> Result<(), Fail> {
    if out.is_null() {
        Err(Fail(UtStatus::NullPointer, "output pointer is null".into()))
    } else {
        Ok(())
    }
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn ut_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ut_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Load a matrix from snapshot JSON.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ut_matrix_from_snapshot(json: *const c_char, out: *mut *mut UtMatrix) -> UtStatus {
    guard(|| {
        check_out(out)?;
        let m = CooccurrenceMatrix::from_snapshot_json(text(json, "json")?, None)?;
        *out = Box::into_raw(Box::new(UtMatrix(m)));
        Ok(())
    })
}

/// # Safety
/// `m` must come from [`ut_matrix_from_snapshot`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ut_matrix_free(m: *mut UtMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Number of vocabulary classes; 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live matrix handle.
#[no_mangle]
pub unsafe extern "C" fn ut_matrix_class_count(m: *const UtMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.n())
}

/// Number of scenes containing both classes (one class twice: its scene count).
///
/// # Safety
/// `m` must be a live handle, `a` and `b` NUL-terminated, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ut_matrix_pair_count(
    m: *const UtMatrix,
    a: *const c_char,
    b: *const c_char,
    out: *mut u64,
) -> UtStatus {
    guard(|| {
        check_out(out)?;
        let m = m.as_ref().ok_or_else(|| Fail(UtStatus::NullPointer, "matrix is null".into()))?;
        *out = m.0.pair_count(text(a, "a")?, text(b, "b")?)?;
        Ok(())
    })
}

/// Top-`k` complements of `anchor` as a JSON ranking. `exclude_person`
/// non-zero leaves the person class out.
///
/// # Safety
/// `m` must be a live handle, `anchor` NUL-terminated, `out_json` valid.
#[no_mangle]
pub unsafe extern "C" fn ut_matrix_top_k(
    m: *const UtMatrix,
    anchor: *const c_char,
    k: usize,
    mode: UtNormMode,
    exclude_person: i32,
    out_json: *mut *mut c_char,
) -> UtStatus {
    guard(|| {
        check_out(out_json)?;
        let m = m.as_ref().ok_or_else(|| Fail(UtStatus::NullPointer, "matrix is null".into()))?;
        let mode = match mode {
            UtNormMode::Conditional => NormMode::Conditional,
            UtNormMode::RowSum => NormMode::RowSum,
        };
        let exclude: &[&str] = if exclude_person != 0 { &[urbantactic::ingest::PERSON] } else { &[] };
        let ranking = m.0.top_k(text(anchor, "anchor")?, k, mode, exclude)?;
        put_string(out_json, serde_json::to_string(&ranking).map_err(|e| Fail(UtStatus::Internal, e.to_string()))?)
    })
}

/// Parse a candidate reply. Produces `{"rows": [[name, description], ...],
/// "rejected": [{"line", "reason"}, ...]}`.
///
/// # Safety
/// `reply` must be NUL-terminated and `out_json` valid.
#[no_mangle]
pub unsafe extern "C" fn ut_parse_candidates(reply: *const c_char, out_json: *mut *mut c_char) -> UtStatus {
    guard(|| {
        check_out(out_json)?;
        let parsed = parse_candidate_csv_detailed(text(reply, "reply")?);
        let rejected: Vec<_> =
            parsed.rejected.iter().map(|r| serde_json::json!({"line": r.line, "reason": r.reason})).collect();
        let doc = serde_json::json!({"rows": parsed.rows, "rejected": rejected});
        put_string(out_json, doc.to_string())
    })
}

/// Build the vision-language prompt for a scene (JSON) and its image file.
///
/// # Safety
/// All string arguments must be NUL-terminated and `out_prompt` valid.
#[no_mangle]
pub unsafe extern "C" fn ut_build_prompt(
    scene_json: *const c_char,
    image_path: *const c_char,
    anchor: *const c_char,
    co_object: *const c_char,
    out_prompt: *mut *mut c_char,
) -> UtStatus {
    guard(|| {
        check_out(out_prompt)?;
        let scene: Scene = serde_json::from_str(text(scene_json, "scene_json")?)
            .map_err(|e| Fail(UtStatus::ParseError, format!("scene: {e}")))?;
        let image = load_image(std::path::Path::new(text(image_path, "image_path")?))?;
        let summary = summarize_scene(&scene, &image)?;
        let bundle = build_prompt(&scene, &summary, text(anchor, "anchor")?, text(co_object, "co_object")?)?;
        put_string(out_prompt, bundle.system_prompt_text)
    })
}

/// Parse Wavefront OBJ text.
///
/// # Safety
/// `obj` must be NUL-terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ut_mesh_parse_obj(obj: *const c_char, out: *mut *mut UtMesh) -> UtStatus {
    guard(|| {
        check_out(out)?;
        let mesh = ObjMesh::parse(text(obj, "obj")?.as_bytes())?;
        *out = Box::into_raw(Box::new(UtMesh(mesh)));
        Ok(())
    })
}

/// # Safety
/// `m` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ut_mesh_free(m: *mut UtMesh) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Triangle count; 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live mesh handle.
#[no_mangle]
pub unsafe extern "C" fn ut_mesh_triangle_count(m: *const UtMesh) -> usize {
    m.as_ref().map_or(0, |m| m.0.triangle_count())
}

/// Axis-aligned bounds as `min[3]` followed by `max[3]`.
///
/// # Safety
/// `m` must be a live handle and `out6` point to six doubles.
#[no_mangle]
pub unsafe extern "C" fn ut_mesh_bounds(m: *const UtMesh, out6: *mut f64) -> UtStatus {
    guard(|| {
        check_out(out6)?;
        let m = m.as_ref().ok_or_else(|| Fail(UtStatus::NullPointer, "mesh is null".into()))?;
        let b = m.0.aabb().ok_or_else(|| Fail(UtStatus::MeshError, "mesh has no vertices".into()))?;
        let out = std::slice::from_raw_parts_mut(out6, 6);
        out[..3].copy_from_slice(&b.min);
        out[3..].copy_from_slice(&b.max);
        Ok(())
    })
}

/// Scale in place to `target_height_m`, resting on y = 0 and centred in x/z.
///
/// # Safety
/// `m` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ut_mesh_normalize(m: *mut UtMesh, target_height_m: f64) -> UtStatus {
    guard(|| {
        let m = m.as_mut().ok_or_else(|| Fail(UtStatus::NullPointer, "mesh is null".into()))?;
        let mesh = std::mem::take(&mut m.0);
        m.0 = normalize_mesh(mesh, target_height_m)?;
        Ok(())
    })
}

/// Reduce in place to at most `target_triangles` triangles. The result keeps
/// the current height and rests on y = 0.
///
/// # Safety
/// `m` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ut_mesh_decimate(m: *mut UtMesh, target_triangles: usize) -> UtStatus {
    guard(|| {
        let m = m.as_mut().ok_or_else(|| Fail(UtStatus::NullPointer, "mesh is null".into()))?;
        let h = m.0.aabb().map(|b| b.height()).unwrap_or(0.0);
        if h.is_nan() || h <= 0.0 {
            return Err(Fail(UtStatus::MeshError, "mesh is empty or flat".into()));
        }
        let asset = MeshAsset::new(String::new(), std::mem::take(&mut m.0), h, Lod::Full);
        m.0 = decimate(&asset, target_triangles).geometry;
        Ok(())
    })
}

/// Serialize as OBJ text.
///
/// # Safety
/// `m` must be a live handle and `out_obj` valid.
#[no_mangle]
pub unsafe extern "C" fn ut_mesh_to_obj(m: *const UtMesh, out_obj: *mut *mut c_char) -> UtStatus {
    guard(|| {
        check_out(out_obj)?;
        let m = m.as_ref().ok_or_else(|| Fail(UtStatus::NullPointer, "mesh is null".into()))?;
        put_string(out_obj, m.0.to_obj_string())
    })
}
