use std::ffi::{CStr, CString};
use std::ptr;

use urbantactic_ffi::*;

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/fixtures");

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(ut_last_error()).to_string_lossy().into_owned() }
}

unsafe fn take(s: *mut std::ffi::c_char) -> String {
    let out = CStr::from_ptr(s).to_string_lossy().into_owned();
    ut_string_free(s);
    out
}

fn reference() -> *mut UtMatrix {
    let json = std::fs::read_to_string(format!("{FIXTURES}/reference_matrix.json")).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { ut_matrix_from_snapshot(c(&json).as_ptr(), &mut m) }, UtStatus::Ok);
    assert!(!m.is_null());
    m
}

#[test]
fn matrix_queries() {
    let m = reference();
    unsafe {
        assert!(ut_matrix_class_count(m) > 0);
        let mut json = ptr::null_mut();
        assert_eq!(ut_matrix_top_k(m, c("bench").as_ptr(), 5, UtNormMode::Conditional, 1, &mut json), UtStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(&take(json)).unwrap();
        let classes: Vec<&str> =
            v["entries"].as_array().unwrap().iter().map(|e| e["class"].as_str().unwrap()).collect();
        assert_eq!(classes, ["window", "tree", "sign", "traffic light", "crosswalk"]);

        let mut n = 0u64;
        assert_eq!(ut_matrix_pair_count(m, c("bench").as_ptr(), c("bench").as_ptr(), &mut n), UtStatus::Ok);
        assert!(n > 0);

        let mut json = ptr::null_mut();
        assert_eq!(
            ut_matrix_top_k(m, c("unicorn").as_ptr(), 5, UtNormMode::Conditional, 1, &mut json),
            UtStatus::UnknownClass
        );
        assert!(json.is_null());
        assert!(last_error().contains("unicorn"));
        assert_eq!(
            ut_matrix_top_k(m, c("bench").as_ptr(), 0, UtNormMode::RowSum, 1, &mut json),
            UtStatus::InvalidArgument
        );
        ut_matrix_free(m);
    }
}

#[test]
fn null_and_bad_input() {
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(ut_matrix_from_snapshot(ptr::null(), &mut m), UtStatus::NullPointer);
        assert_eq!(ut_matrix_from_snapshot(c("{").as_ptr(), &mut m), UtStatus::ParseError);
        assert!(!last_error().is_empty());
        assert_eq!(ut_matrix_from_snapshot(c("{}").as_ptr(), ptr::null_mut()), UtStatus::NullPointer);
        let bad = [0xffu8, 0];
        assert_eq!(ut_matrix_from_snapshot(bad.as_ptr().cast(), &mut m), UtStatus::InvalidUtf8);
        assert_eq!(ut_matrix_class_count(ptr::null()), 0);
        ut_matrix_free(ptr::null_mut());
        ut_mesh_free(ptr::null_mut());
        ut_string_free(ptr::null_mut());
    }
}

#[test]
fn candidate_reply() {
    let reply = std::fs::read_to_string(format!("{FIXTURES}/vlm/scene2.txt")).unwrap();
    unsafe {
        let mut json = ptr::null_mut();
        assert_eq!(ut_parse_candidates(c(&reply).as_ptr(), &mut json), UtStatus::Ok);
        assert_eq!(last_error(), "");
        let v: serde_json::Value = serde_json::from_str(&take(json)).unwrap();
        assert_eq!(v["rows"].as_array().unwrap().len(), 5);
        assert_eq!(v["rows"][0][0], "Outdoor Chess Table");
    }
}

#[test]
fn mesh_pipeline() {
    let obj = std::fs::read_to_string(format!("{FIXTURES}/meshes/default.obj")).unwrap();
    unsafe {
        let mut mesh = ptr::null_mut();
        assert_eq!(ut_mesh_parse_obj(c(&obj).as_ptr(), &mut mesh), UtStatus::Ok);
        assert_eq!(ut_mesh_triangle_count(mesh), 12);
        assert_eq!(ut_mesh_normalize(mesh, 0.8), UtStatus::Ok);
        let mut b = [0.0f64; 6];
        assert_eq!(ut_mesh_bounds(mesh, b.as_mut_ptr()), UtStatus::Ok);
        assert_eq!(b[1], 0.0);
        assert!((b[4] - 0.8).abs() < 1e-12);
        assert!((b[0] + b[3]).abs() < 1e-12 && (b[2] + b[5]).abs() < 1e-12);
        assert_eq!(ut_mesh_decimate(mesh, 2000), UtStatus::Ok);
        assert_eq!(ut_mesh_triangle_count(mesh), 12);
        let mut text = ptr::null_mut();
        assert_eq!(ut_mesh_to_obj(mesh, &mut text), UtStatus::Ok);
        assert_eq!(take(text).lines().filter(|l| l.starts_with("f ")).count(), 12);
        assert_eq!(ut_mesh_normalize(mesh, -1.0), UtStatus::MeshError);
        ut_mesh_free(mesh);

        let mut bad = ptr::null_mut();
        assert_eq!(ut_mesh_parse_obj(c("v 0 0 0\nf 1 2 9\n").as_ptr(), &mut bad), UtStatus::ParseError);
        assert!(last_error().contains("line 2"), "{}", last_error());
    }
}

#[test]
fn prompt_from_scene() {
    let scenes: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(format!("{FIXTURES}/corpus/scenes.json")).unwrap()).unwrap();
    let list = scenes.get("scenes").unwrap_or(&scenes).as_array().unwrap().clone();
    let raw = list.iter().find(|s| s["scene_id"] == "scene2").unwrap();
    let json = serde_json::to_string(raw).unwrap();
    let image = format!("{FIXTURES}/corpus/images/scene2.png");
    unsafe {
        let mut out = ptr::null_mut();
        let st =
            ut_build_prompt(c(&json).as_ptr(), c(&image).as_ptr(), c("bench").as_ptr(), c("tree").as_ptr(), &mut out);
        assert_eq!(st, UtStatus::Ok, "{}", last_error());
        let prompt = take(out);
        assert!(prompt.contains("bench") && prompt.contains("tree"));
        let st = ut_build_prompt(
            c(&json).as_ptr(),
            c("/nonexistent.png").as_ptr(),
            c("bench").as_ptr(),
            c("tree").as_ptr(),
            &mut out,
        );
        assert_eq!(st, UtStatus::ImageError);
    }
}

#[test]
fn header_is_current_and_compiles() {
    let dir = env!("CARGO_MANIFEST_DIR");
    let header = std::fs::read_to_string(format!("{dir}/include/urbantactic.h")).unwrap();
    for sym in [
        "ut_last_error",
        "ut_string_free",
        "ut_matrix_from_snapshot",
        "ut_matrix_top_k",
        "ut_parse_candidates",
        "ut_build_prompt",
        "ut_mesh_normalize",
        "ut_mesh_decimate",
        "typedef struct UtMatrix UtMatrix",
        "UT_STATUS_UNKNOWN_CLASS = 5",
    ] {
        assert!(header.contains(sym), "header lacks {sym}");
    }
    let src = std::env::temp_dir().join(format!("ut_header_{}.c", std::process::id()));
    std::fs::write(&src, "#include \"urbantactic.h\"\nint main(void) { return ut_last_error() == 0; }\n").unwrap();
    let status = std::process::Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(format!("{dir}/include"))
        .arg(&src)
        .status()
        .expect("a C compiler named cc");
    let _ = std::fs::remove_file(&src);
    assert!(status.success());
}
