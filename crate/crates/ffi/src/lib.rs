//! C interface. Engines are opaque handles created from a JSON polygon
//! document; every call returns a [`PcskelCode`] and leaves a message for
//! [`pcskel_last_error`] on failure. Strings handed out must be released
//! with [`pcskel_string_free`].

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use pcskel::engine::{EngineError, EngineOptions, Status};
use pcskel::io::{parse_document, ExportFormat, Session};

/// Opaque engine handle.
pub struct PcskelEngine {
    session: Session,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcskelCode {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    BadDocument = 3,
    BadInput = 4,
    Fault = 5,
    NotRunning = 6,
    InvalidArgument = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcskelStatus {
    Running = 0,
    Terminated = 1,
    MaxHeight = 2,
    Faulted = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcskelFormat {
    Json = 0,
    Svg = 1,
    Obj = 2,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn engine_code(e: &EngineError) -> PcskelCode {
    match e {
        EngineError::Input(_) | EngineError::Schedule(_) | EngineError::MaxHeightRequired => PcskelCode::BadInput,
        EngineError::Fault(_) | EngineError::Trace(_) => PcskelCode::Fault,
        EngineError::NotRunning(_) => PcskelCode::NotRunning,
        EngineError::Edit(_) => PcskelCode::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (PcskelCode, String)>) -> PcskelCode {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PcskelCode::Ok,
        Ok(Err((code, msg))) => {
            set_error(&msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            PcskelCode::Panic
        }
    }
}

fn fail(e: EngineError) -> (PcskelCode, String) {
    (engine_code(&e), e.to_string())
}

fn null() -> (PcskelCode, String) {
    (PcskelCode::NullArgument, "null argument".into())
}

/// Message describing the last failure on this thread. Valid until the next
/// call on the same thread.
#[no_mangle]
pub extern "C" fn pcskel_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Builds an engine from a NUL-terminated JSON document. `max_z` bounds the
/// propagation height; pass NaN for none.
///
/// # Safety
/// `doc` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pcskel_engine_new(doc: *const c_char, max_z: f64, out: *mut *mut PcskelEngine) -> PcskelCode {
    guard(|| {
        if doc.is_null() || out.is_null() {
            return Err(null());
        }
        *out = ptr::null_mut();
        let text = CStr::from_ptr(doc)
            .to_str()
            .map_err(|e| (PcskelCode::InvalidUtf8, e.to_string()))?;
        let doc = parse_document(text.as_bytes()).map_err(|e| (PcskelCode::BadDocument, e.to_string()))?;
        let opts = EngineOptions { max_z: (!max_z.is_nan()).then_some(max_z), ..EngineOptions::default() };
        let session = Session::new(doc, opts).map_err(fail)?;
        *out = Box::into_raw(Box::new(PcskelEngine { session }));
        Ok(())
    })
}

/// # Safety
/// `engine` must come from [`pcskel_engine_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pcskel_engine_free(engine: *mut PcskelEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Raises the wavefront by `dz`, stopping early at termination, at the
/// maximum height, or (when `pause_at_event` is nonzero) after the first
/// event. The height actually gained goes to `advanced` if non-null.
///
/// # Safety
/// `engine` must be a live handle; `advanced` null or valid.
#[no_mangle]
pub unsafe extern "C" fn pcskel_engine_step(
    engine: *mut PcskelEngine,
    dz: f64,
    pause_at_event: i32,
    advanced: *mut f64,
) -> PcskelCode {
    guard(|| {
        let e = engine.as_mut().ok_or_else(null)?;
        let r = e.session.step(dz, pause_at_event != 0).map_err(fail)?;
        if !advanced.is_null() {
            *advanced = r.advanced_dz;
        }
        if r.status == Status::Faulted {
            return Err((PcskelCode::Fault, r.fault.unwrap_or_default()));
        }
        Ok(())
    })
}

/// Steps by `dz` until the propagation stops.
///
/// # Safety
/// `engine` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pcskel_engine_run(engine: *mut PcskelEngine, dz: f64) -> PcskelCode {
    guard(|| {
        let e = engine.as_mut().ok_or_else(null)?;
        if !(dz > 0.0) {
            return Err((PcskelCode::InvalidArgument, "step must be positive".into()));
        }
        if e.session.engine().max_z().is_none()
            && e.session.document().edges.iter().any(|s| s.weight() <= 0.0)
        {
            return Err(fail(EngineError::MaxHeightRequired));
        }
        while e.session.engine().status() == Status::Running {
            let r = e.session.step(dz, false).map_err(fail)?;
            if r.status == Status::Faulted {
                return Err((PcskelCode::Fault, r.fault.unwrap_or_default()));
            }
        }
        Ok(())
    })
}

/// Sets the inclination of edge `edge` of loop `loop_index` (current loop
/// numbering) to `alpha` radians.
///
/// # Safety
/// `engine` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pcskel_engine_set_alpha(
    engine: *mut PcskelEngine,
    loop_index: usize,
    edge: usize,
    alpha: f64,
) -> PcskelCode {
    guard(|| {
        let e = engine.as_mut().ok_or_else(null)?;
        e.session
            .edit(pcskel::io::Edit::SetAlpha { loop_index, edge, alpha })
            .map(|_| ())
            .map_err(fail)
    })
}

/// # Safety
/// `engine` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn pcskel_engine_status(engine: *const PcskelEngine, out: *mut PcskelStatus) -> PcskelCode {
    guard(|| {
        let e = engine.as_ref().ok_or_else(null)?;
        let out = out.as_mut().ok_or_else(null)?;
        *out = match e.session.engine().status() {
            Status::Running => PcskelStatus::Running,
            Status::Terminated => PcskelStatus::Terminated,
            Status::MaxHeight => PcskelStatus::MaxHeight,
            Status::Faulted => PcskelStatus::Faulted,
        };
        Ok(())
    })
}

/// Current height of the wavefront.
///
/// # Safety
/// `engine` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn pcskel_engine_height(engine: *const PcskelEngine, out: *mut f64) -> PcskelCode {
    guard(|| {
        let e = engine.as_ref().ok_or_else(null)?;
        *out.as_mut().ok_or_else(null)? = e.session.engine().z();
        Ok(())
    })
}

/// Renders the skeleton (JSON), the offsets and skeleton (SVG) or the roof
/// (OBJ) into a new string owned by the caller. `format` is a
/// [`PcskelFormat`] value.
///
/// # Safety
/// `engine` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn pcskel_engine_export(
    engine: *const PcskelEngine,
    format: i32,
    out: *mut *mut c_char,
) -> PcskelCode {
    guard(|| {
        let e = engine.as_ref().ok_or_else(null)?;
        let out = out.as_mut().ok_or_else(null)?;
        *out = ptr::null_mut();
        let format = match format {
            f if f == PcskelFormat::Json as i32 => ExportFormat::Json,
            f if f == PcskelFormat::Svg as i32 => ExportFormat::Svg,
            f if f == PcskelFormat::Obj as i32 => ExportFormat::Obj,
            f => return Err((PcskelCode::InvalidArgument, format!("unknown format {f}"))),
        };
        let text = e.session.export(format).map_err(fail)?;
        *out = CString::new(text).expect("exports contain no NUL").into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pcskel_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
