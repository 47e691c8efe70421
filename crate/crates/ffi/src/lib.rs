//! C ABI over `pact-core`.
//!
//! Handles are opaque and owned by the caller, who releases them with the
//! matching `_free` function. Every fallible call returns a [`PactStatus`];
//! on failure a description is available from [`pact_last_error`] on the same
//! thread. Strings handed out by the library are NUL-terminated UTF-8 and must
//! be released with [`pact_string_free`]. Structured results are JSON.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use pact_core::error::{EngineError, MonitorError};
use pact_core::lang::{check_source, parse_event_line};
use pact_core::monitor::Session;
use pact_core::norm::ContractSpec;
use pact_core::space::{analyze, build_graph, export_dot, export_structured_graph};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PactStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidSpec = 3,
    EngineError = 4,
    MalformedEvent = 5,
    StaleTimestamp = 6,
    Terminated = 7,
    UnexpectedEvent = 8,
    Panic = 99,
}

/// A parsed and validated contract.
pub struct PactContract {
    spec: Arc<ContractSpec>,
}

/// A monitoring session on a contract.
pub struct PactSession {
    session: Session,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: PactStatus, msg: impl Into<String>) -> PactStatus {
    set_error(msg);
    status
}

fn monitor_status(e: &MonitorError) -> PactStatus {
    match e {
        MonitorError::StaleTimestamp { .. } => PactStatus::StaleTimestamp,
        MonitorError::Terminated { .. } | MonitorError::Engine(EngineError::TerminalState { .. }) => {
            PactStatus::Terminated
        }
        MonitorError::UnexpectedEvent { .. } => PactStatus::UnexpectedEvent,
        MonitorError::MalformedEvent { .. } => PactStatus::MalformedEvent,
        MonitorError::Engine(EngineError::InvalidSpec(_)) => PactStatus::InvalidSpec,
        _ => PactStatus::EngineError,
    }
}

/// Run `f`, turning a panic into [`PactStatus::Panic`].
fn guard(f: impl FnOnce() -> PactStatus) -> PactStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(PactStatus::Panic, "internal panic"),
    }
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, PactStatus> {
    if p.is_null() {
        return Err(fail(PactStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(PactStatus::InvalidUtf8, "argument is not valid UTF-8"))
}

/// Hand `s` to the caller through `out`.
unsafe fn emit(out: *mut *mut c_char, s: String) -> PactStatus {
    if out.is_null() {
        return fail(PactStatus::NullPointer, "null output pointer");
    }
    match CString::new(s) {
        Ok(c) => {
            *out = c.into_raw();
            PactStatus::Ok
        }
        Err(_) => fail(PactStatus::EngineError, "result contains a NUL byte"),
    }
}

/// Optional JSON output: skipped when `out` is null.
unsafe fn emit_opt(out: *mut *mut c_char, json: impl FnOnce() -> String) -> PactStatus {
    if out.is_null() {
        return PactStatus::Ok;
    }
    emit(out, json())
}

/// The last error message on this thread, or NULL. The pointer stays valid
/// until the next failing call on the same thread; do not free it.
#[no_mangle]
pub extern "C" fn pact_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Release a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn pact_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parse and validate `.pact` source. On [`PactStatus::InvalidSpec`] the last
/// error lists every error diagnostic, one per line.
///
/// # Safety
/// `source` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pact_contract_parse(
    source: *const c_char,
    out: *mut *mut PactContract,
) -> PactStatus {
    guard(|| {
        if out.is_null() {
            return fail(PactStatus::NullPointer, "null output pointer");
        }
        let source = match read_str(source) {
            Ok(s) => s,
            Err(status) => return status,
        };
        let report = check_source(source);
        match report.valid_spec() {
            Some(spec) => {
                *out = Box::into_raw(Box::new(PactContract {
                    spec: Arc::new(spec.clone()),
                }));
                PactStatus::Ok
            }
            None => {
                let msgs: Vec<String> = report
                    .diagnostics
                    .iter()
                    .filter(|d| d.is_error())
                    .map(ToString::to_string)
                    .collect();
                fail(PactStatus::InvalidSpec, msgs.join("\n"))
            }
        }
    })
}

/// # Safety
/// `contract` must come from [`pact_contract_parse`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn pact_contract_free(contract: *mut PactContract) {
    if !contract.is_null() {
        drop(Box::from_raw(contract));
    }
}

unsafe fn with_contract(
    contract: *const PactContract,
    f: impl FnOnce(&ContractSpec) -> Result<String, EngineError>,
    out: *mut *mut c_char,
) -> PactStatus {
    guard(|| {
        let Some(c) = contract.as_ref() else {
            return fail(PactStatus::NullPointer, "null contract");
        };
        match f(&c.spec) {
            Ok(s) => emit(out, s),
            Err(e) => fail(PactStatus::EngineError, e.to_string()),
        }
    })
}

/// Graphviz rendering of the state graph.
///
/// # Safety
/// `contract` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pact_contract_graph_dot(
    contract: *const PactContract,
    out: *mut *mut c_char,
) -> PactStatus {
    with_contract(contract, |spec| build_graph(spec).map(|g| export_dot(&g)), out)
}

/// The state graph as a JSON document.
///
/// # Safety
/// `contract` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pact_contract_graph_json(
    contract: *const PactContract,
    out: *mut *mut c_char,
) -> PactStatus {
    with_contract(
        contract,
        |spec| {
            build_graph(spec)
                .map(|g| serde_json::to_string(&export_structured_graph(&g)).expect("serialisable"))
        },
        out,
    )
}

/// Terminals, contrary-to-duty triples and provision classes as JSON.
///
/// # Safety
/// `contract` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pact_contract_analysis_json(
    contract: *const PactContract,
    out: *mut *mut c_char,
) -> PactStatus {
    with_contract(
        contract,
        |spec| analyze(spec).map(|r| serde_json::to_string(&r).expect("serialisable")),
        out,
    )
}

/// Open a session with the clock at `epoch`. The session keeps its own
/// reference to the contract, so the contract handle may be freed first.
///
/// # Safety
/// `contract` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pact_session_open(
    contract: *const PactContract,
    epoch: u64,
    out: *mut *mut PactSession,
) -> PactStatus {
    guard(|| {
        let Some(c) = contract.as_ref() else {
            return fail(PactStatus::NullPointer, "null contract");
        };
        if out.is_null() {
            return fail(PactStatus::NullPointer, "null output pointer");
        }
        match Session::open(Arc::clone(&c.spec), epoch) {
            Ok(session) => {
                *out = Box::into_raw(Box::new(PactSession { session }));
                PactStatus::Ok
            }
            Err(e) => fail(monitor_status(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `session` must come from [`pact_session_open`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn pact_session_free(session: *mut PactSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

/// Submit one event line, e.g. `t=20 agent=s act=alpha attrs{qty="1"}`.
/// When `records_out` is non-NULL it receives the produced transition
/// records as a JSON array. A blank or comment line is a no-op.
///
/// # Safety
/// `session` must be a live handle; `line` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn pact_session_submit_line(
    session: *mut PactSession,
    line: *const c_char,
    records_out: *mut *mut c_char,
) -> PactStatus {
    guard(|| {
        let Some(s) = session.as_mut() else {
            return fail(PactStatus::NullPointer, "null session");
        };
        let line = match read_str(line) {
            Ok(l) => l,
            Err(status) => return status,
        };
        let event = match parse_event_line(line, 1) {
            Ok(Some(ev)) => ev,
            Ok(None) => return emit_opt(records_out, || "[]".into()),
            Err(d) => return fail(PactStatus::MalformedEvent, d.to_string()),
        };
        match s.session.submit_event(event) {
            Ok(records) => emit_opt(records_out, || {
                serde_json::to_string(&records).expect("serialisable")
            }),
            Err(e) => fail(monitor_status(&e), e.to_string()),
        }
    })
}

/// Advance the clock, lapsing overdue obligations.
///
/// # Safety
/// `session` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pact_session_advance_clock(
    session: *mut PactSession,
    to: u64,
    records_out: *mut *mut c_char,
) -> PactStatus {
    guard(|| {
        let Some(s) = session.as_mut() else {
            return fail(PactStatus::NullPointer, "null session");
        };
        match s.session.advance_clock(to) {
            Ok(records) => emit_opt(records_out, || {
                serde_json::to_string(&records).expect("serialisable")
            }),
            Err(e) => fail(monitor_status(&e), e.to_string()),
        }
    })
}

/// Current clock, canonical state key and active norms as JSON.
///
/// # Safety
/// `session` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pact_session_state_json(
    session: *const PactSession,
    out: *mut *mut c_char,
) -> PactStatus {
    guard(|| {
        let Some(s) = session.as_ref() else {
            return fail(PactStatus::NullPointer, "null session");
        };
        let s = &s.session;
        let doc = serde_json::json!({
            "clock": s.clock(),
            "epoch": s.epoch(),
            "key": s.state().canonical_key(),
            "terminated": s.state().terminal_class(),
            "norms": s.active_norms(),
        });
        emit(out, doc.to_string())
    })
}

/// The transition log as a JSON array.
///
/// # Safety
/// `session` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pact_session_history_json(
    session: *const PactSession,
    out: *mut *mut c_char,
) -> PactStatus {
    guard(|| {
        let Some(s) = session.as_ref() else {
            return fail(PactStatus::NullPointer, "null session");
        };
        emit(out, serde_json::to_string(s.session.history()).expect("serialisable"))
    })
}
