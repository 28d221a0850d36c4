use std::ffi::{CStr, CString};
use std::ptr;

use pcskel_ffi::*;

const SQUARE: &str = r#"{"loops":[[[0,0],[1,0],[1,1],[0,1]]]}"#;

fn new_engine(doc: &str, max_z: f64) -> Result<*mut PcskelEngine, (PcskelCode, String)> {
    let doc = CString::new(doc).unwrap();
    let mut h = ptr::null_mut();
    let code = unsafe { pcskel_engine_new(doc.as_ptr(), max_z, &mut h) };
    if code == PcskelCode::Ok {
        Ok(h)
    } else {
        Err((code, last_error()))
    }
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(pcskel_last_error()) }.to_str().unwrap().to_string()
}

fn export(h: *mut PcskelEngine, format: PcskelFormat) -> String {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { pcskel_engine_export(h, format as i32, &mut s) }, PcskelCode::Ok);
    let text = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_string();
    unsafe { pcskel_string_free(s) };
    text
}

#[test]
fn square_steps_and_terminates() {
    let h = new_engine(SQUARE, f64::NAN).unwrap();
    let mut adv = 0.0;
    assert_eq!(unsafe { pcskel_engine_step(h, 0.2, 0, &mut adv) }, PcskelCode::Ok);
    assert_eq!(adv, 0.2);
    assert_eq!(unsafe { pcskel_engine_step(h, 0.4, 0, &mut adv) }, PcskelCode::Ok);
    assert!((adv - 0.3).abs() < 1e-12);
    let mut status = PcskelStatus::Running;
    assert_eq!(unsafe { pcskel_engine_status(h, &mut status) }, PcskelCode::Ok);
    assert_eq!(status, PcskelStatus::Terminated);
    let mut z = 0.0;
    assert_eq!(unsafe { pcskel_engine_height(h, &mut z) }, PcskelCode::Ok);
    assert!((z - 0.5).abs() < 1e-12);
    assert_eq!(unsafe { pcskel_engine_step(h, 0.1, 0, ptr::null_mut()) }, PcskelCode::NotRunning);
    assert!(last_error().contains("not running"));
    let json = export(h, PcskelFormat::Json);
    assert_eq!(json.matches("\"kind\"").count(), 5);
    assert!(export(h, PcskelFormat::Obj).starts_with("# roof mesh\nv "));
    assert!(export(h, PcskelFormat::Svg).starts_with("<svg"));
    unsafe { pcskel_engine_free(h) };
}

#[test]
fn errors_are_reported() {
    let (code, msg) = new_engine(r#"{"loops":[[[0,0],[1,0]]]}"#, f64::NAN).unwrap_err();
    assert_eq!(code, PcskelCode::BadDocument);
    assert!(msg.contains("ring requires ≥3 points"), "{msg}");
    let (code, _) = new_engine(r#"{"loops":[[[0,0],[2,2],[2,0],[0,2]]]}"#, f64::NAN).unwrap_err();
    assert_eq!(code, PcskelCode::BadInput);
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { pcskel_engine_new(ptr::null(), f64::NAN, &mut h) }, PcskelCode::NullArgument);
    assert_eq!(unsafe { pcskel_engine_run(ptr::null_mut(), 0.1) }, PcskelCode::NullArgument);
    let h = new_engine(SQUARE, f64::NAN).unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { pcskel_engine_export(h, 7, &mut s) }, PcskelCode::InvalidArgument);
    assert!(s.is_null());
    assert_eq!(unsafe { pcskel_engine_set_alpha(h, 0, 9, 1.0) }, PcskelCode::InvalidArgument);
    unsafe { pcskel_engine_free(h) };
    unsafe { pcskel_engine_free(ptr::null_mut()) };
}

#[test]
fn stationary_edges_need_a_height_limit() {
    let doc = r#"{"loops":[[[0,0],[1,0],[1,1],[0,1]]],"edges":[{"stationary":true},{"weight":1},{"weight":1},{"weight":1}]}"#;
    let h = new_engine(doc, f64::NAN).unwrap();
    assert_eq!(unsafe { pcskel_engine_run(h, 0.1) }, PcskelCode::BadInput);
    unsafe { pcskel_engine_free(h) };
    let h = new_engine(doc, 0.25).unwrap();
    assert_eq!(unsafe { pcskel_engine_run(h, 0.1) }, PcskelCode::Ok);
    let mut status = PcskelStatus::Running;
    unsafe { pcskel_engine_status(h, &mut status) };
    assert_eq!(status, PcskelStatus::MaxHeight);
    unsafe { pcskel_engine_free(h) };
}

#[test]
fn edit_through_handle() {
    let h = new_engine(SQUARE, 2.0).unwrap();
    unsafe { pcskel_engine_step(h, 0.1, 0, ptr::null_mut()) };
    assert_eq!(unsafe { pcskel_engine_set_alpha(h, 0, 0, std::f64::consts::FRAC_PI_2) }, PcskelCode::Ok);
    assert_eq!(unsafe { pcskel_engine_run(h, 0.1) }, PcskelCode::Ok);
    unsafe { pcskel_engine_free(h) };
}

/// The generated header is valid C.
#[test]
fn header_compiles() {
    let dir = env!("CARGO_MANIFEST_DIR");
    let header = std::path::Path::new(dir).join("include/pcskel.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for f in ["pcskel_engine_new", "pcskel_engine_step", "pcskel_engine_export", "pcskel_last_error", "PCSKEL_FORMAT_OBJ"] {
        assert!(text.contains(f), "{f} missing from header");
    }
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"pcskel.h\"\nint main(void) { PcskelEngine *e = 0; return pcskel_engine_free(e), 0; }\n",
    )
    .unwrap();
    match std::process::Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-I"])
        .arg(header.parent().unwrap())
        .arg(&src)
        .output()
    {
        Ok(out) => assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr)),
        Err(_) => eprintln!("no C compiler; syntax check skipped"),
    }
}
