//! C interface to the runtime. Systems are opaque handles, every fallible
//! call returns a [`MasrestStatus`], and the message for the most recent
//! failure on the calling thread is available from [`masrest_last_error`].
//!
//! Strings passed in must be NUL-terminated UTF-8. Strings handed out must
//! be released with [`masrest_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use masrest::project::Project;
use masrest::rest::{Api, Request};
use masrest::{Mas, MasError};

/// Result codes shared by every function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MasrestStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    NotFound = 3,
    Conflict = 4,
    ParseError = 5,
    InvalidSpec = 6,
    Unsupported = 7,
    Rejected = 8,
    Io = 9,
    Panic = 10,
}

/// A running system plus its REST facade.
pub struct MasrestSystem {
    api: Api,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &MasError) -> MasrestStatus {
    match e {
        MasError::NotFound { .. } => MasrestStatus::NotFound,
        MasError::Conflict { .. } => MasrestStatus::Conflict,
        MasError::Parse(_) => MasrestStatus::ParseError,
        MasError::InvalidSpec(_) => MasrestStatus::InvalidSpec,
        MasError::UnsupportedPerformative(_) => MasrestStatus::Unsupported,
        MasError::Precondition(_)
        | MasError::CardinalityExceeded { .. }
        | MasError::NotCommitted { .. }
        | MasError::OpFailure(_) => MasrestStatus::Rejected,
        MasError::Io(_) => MasrestStatus::Io,
    }
}

fn fail(status: MasrestStatus, msg: impl Into<String>) -> MasrestStatus {
    set_error(msg);
    status
}

/// Runs `f`, converting panics into [`MasrestStatus::Panic`].
fn guard(f: impl FnOnce() -> Result<(), MasrestStatus>) -> MasrestStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MasrestStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(MasrestStatus::Panic, "internal panic"),
    }
}

fn mas_err(e: MasError) -> MasrestStatus {
    fail(status_of(&e), e.to_string())
}

/// # Safety
/// `p` is null or a NUL-terminated string valid for the call.
unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, MasrestStatus> {
    if p.is_null() {
        return Err(fail(MasrestStatus::NullArgument, format!("`{what}` is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(MasrestStatus::InvalidUtf8, format!("`{what}` is not UTF-8")))
}

/// # Safety
/// `sys` is null or a live handle from this library.
unsafe fn system<'a>(sys: *const MasrestSystem) -> Result<&'a MasrestSystem, MasrestStatus> {
    sys.as_ref().ok_or_else(|| fail(MasrestStatus::NullArgument, "system handle is null"))
}

fn into_c(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("NULs replaced").into_raw()
}

/// Creates an empty in-memory system with its scheduler paused.
#[no_mangle]
pub extern "C" fn masrest_system_new() -> *mut MasrestSystem {
    catch_unwind(|| Box::into_raw(Box::new(MasrestSystem { api: Api::new(Mas::default()) }))).unwrap_or(ptr::null_mut())
}

/// Validates and boots a project file. The scheduler stays paused; drive it
/// with [`masrest_run_until_quiescent`].
///
/// # Safety
/// `path` is a NUL-terminated string; `out` points to writable storage.
#[no_mangle]
pub unsafe extern "C" fn masrest_system_from_project(path: *const c_char, out: *mut *mut MasrestSystem) -> MasrestStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(MasrestStatus::NullArgument, "`out` is null"));
        }
        let path = text(path, "path")?;
        let project = Project::load(path).map_err(|diags| {
            let joined: Vec<String> = diags.iter().map(ToString::to_string).collect();
            fail(MasrestStatus::InvalidSpec, joined.join("\n"))
        })?;
        let store = project.revision_store(None).map_err(mas_err)?;
        let mas = project.boot(store).map_err(mas_err)?;
        *out = Box::into_raw(Box::new(MasrestSystem { api: Api::new(mas) }));
        Ok(())
    })
}

/// Stops the system and frees the handle. Null is ignored.
///
/// # Safety
/// `sys` is null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn masrest_system_free(sys: *mut MasrestSystem) {
    if sys.is_null() {
        return;
    }
    let sys = Box::from_raw(sys);
    let _ = catch_unwind(AssertUnwindSafe(|| sys.api.mas().shutdown()));
}

/// # Safety
/// Pointers are valid for the call; strings are NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn masrest_spawn_agent(
    sys: *const MasrestSystem,
    name: *const c_char,
    source: *const c_char,
) -> MasrestStatus {
    guard(|| {
        let sys = system(sys)?;
        let (name, source) = (text(name, "name")?, text(source, "source")?);
        sys.api.mas().spawn_agent(name, source).map(drop).map_err(mas_err)
    })
}

/// # Safety
/// Pointers are valid for the call; strings are NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn masrest_kill_agent(sys: *const MasrestSystem, name: *const c_char) -> MasrestStatus {
    guard(|| {
        let sys = system(sys)?;
        sys.api.mas().kill_agent(text(name, "name")?).map_err(mas_err)
    })
}

/// Queues a message; its id is written to `out_id` when non-null.
///
/// # Safety
/// Pointers are valid for the call; strings are NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn masrest_send_message(
    sys: *const MasrestSystem,
    to: *const c_char,
    sender: *const c_char,
    performative: *const c_char,
    content: *const c_char,
    out_id: *mut u64,
) -> MasrestStatus {
    guard(|| {
        let sys = system(sys)?;
        let id = sys
            .api
            .mas()
            .deliver_message(
                text(to, "to")?,
                text(sender, "sender")?,
                text(performative, "performative")?,
                text(content, "content")?,
            )
            .map_err(mas_err)?;
        if let Some(out) = out_id.as_mut() {
            *out = id;
        }
        Ok(())
    })
}

/// Steps every agent until nothing is left to do or `max_rounds` pass.
/// Writes whether the system went quiet to `out_quiescent` when non-null.
///
/// # Safety
/// `sys` is a live handle; `out_quiescent` is null or writable.
#[no_mangle]
pub unsafe extern "C" fn masrest_run_until_quiescent(
    sys: *const MasrestSystem,
    max_rounds: u32,
    out_quiescent: *mut bool,
) -> MasrestStatus {
    guard(|| {
        let quiet = system(sys)?.api.mas().run_until_quiescent(max_rounds as usize);
        if let Some(out) = out_quiescent.as_mut() {
            *out = quiet;
        }
        Ok(())
    })
}

/// Sends one request through the REST layer without a network. `body` may
/// be null. The HTTP status goes to `out_status` and the JSON body (empty
/// for 204) to `out_body`, which the caller frees.
///
/// # Safety
/// Pointers are valid for the call; `out_status` and `out_body` are writable.
#[no_mangle]
pub unsafe extern "C" fn masrest_request(
    sys: *const MasrestSystem,
    method: *const c_char,
    target: *const c_char,
    body: *const c_char,
    out_status: *mut u16,
    out_body: *mut *mut c_char,
) -> MasrestStatus {
    guard(|| {
        let sys = system(sys)?;
        if out_status.is_null() || out_body.is_null() {
            return Err(fail(MasrestStatus::NullArgument, "output pointer is null"));
        }
        let body = if body.is_null() { "" } else { text(body, "body")? };
        let resp = sys.api.handle(&Request::new(text(method, "method")?, text(target, "target")?, body.as_bytes()));
        *out_status = resp.status;
        *out_body = into_c(String::from_utf8(resp.body_bytes()).expect("serde_json emits UTF-8"));
        Ok(())
    })
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` is null or came from this library and was not freed already.
#[no_mangle]
pub unsafe extern "C" fn masrest_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn masrest_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Status code name, for diagnostics. Never null; static storage.
#[no_mangle]
pub extern "C" fn masrest_status_name(status: MasrestStatus) -> *const c_char {
    let s: &'static CStr = match status {
        MasrestStatus::Ok => c"ok",
        MasrestStatus::NullArgument => c"null_argument",
        MasrestStatus::InvalidUtf8 => c"invalid_utf8",
        MasrestStatus::NotFound => c"not_found",
        MasrestStatus::Conflict => c"conflict",
        MasrestStatus::ParseError => c"parse_error",
        MasrestStatus::InvalidSpec => c"invalid_spec",
        MasrestStatus::Unsupported => c"unsupported",
        MasrestStatus::Rejected => c"rejected",
        MasrestStatus::Io => c"io",
        MasrestStatus::Panic => c"panic",
    };
    s.as_ptr()
}
