//! C ABI over `crowdgate-core`.
//!
//! Every function returns a status code: `CROWDGATE_OK` on success, one of
//! the `CROWDGATE_ERR_*` codes for a malformed call, or the library's own
//! error code (10 and above). Results are written through out-pointers.
//! After a failure, `crowdgate_last_error` describes it. Strings returned by
//! the library must be released with `crowdgate_string_free`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use crowdgate_core::online::{OnlineSession, OnlineSettings, SessionState, Strategy};
use crowdgate_core::simulator::VerifyDocument;
use crowdgate_core::verification::{verify_report, VerificationConfig};
use crowdgate_core::{
    prediction, verification, AnswerDomain, CostModel, Error, Vote, WorkerProfile,
};

pub const CROWDGATE_OK: i32 = 0;
pub const CROWDGATE_ERR_NULL_POINTER: i32 = 1;
pub const CROWDGATE_ERR_INVALID_UTF8: i32 = 2;
pub const CROWDGATE_ERR_PANIC: i32 = 3;
pub const CROWDGATE_ERR_INVALID_ARGUMENT: i32 = 4;

pub const CROWDGATE_STATE_COLLECTING: i32 = 0;
pub const CROWDGATE_STATE_TERMINATED: i32 = 1;
pub const CROWDGATE_STATE_EXHAUSTED: i32 = 2;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

enum Failure {
    Code(i32, String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Lib(Error::Json(e))
    }
}

type FfiResult = Result<(), Failure>;

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn guard(f: impl FnOnce() -> FfiResult) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            CROWDGATE_OK
        }
        Ok(Err(Failure::Code(code, msg))) => {
            set_last_error(msg);
            code
        }
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(e.to_string());
            e.code()
        }
        Err(_) => {
            set_last_error("internal panic".into());
            CROWDGATE_ERR_PANIC
        }
    }
}

fn null(what: &str) -> Failure {
    Failure::Code(CROWDGATE_ERR_NULL_POINTER, format!("{what} is null"))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn string<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        Failure::Code(
            CROWDGATE_ERR_INVALID_UTF8,
            format!("{what} is not valid UTF-8"),
        )
    })
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " "))
        .expect("interior NULs removed")
        .into_raw()
}

/// Message for the most recent failure on this thread, or null. The
/// pointer stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn crowdgate_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by the library. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn crowdgate_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Probability that a majority of `n` (odd) workers of accuracy `mu` is
/// right.
#[no_mangle]
pub unsafe extern "C" fn crowdgate_expected_majority_prob(
    n: usize,
    mu: f64,
    result: *mut f64,
) -> i32 {
    guard(|| {
        *out(result, "result")? = prediction::expected_majority_prob(n, mu)?;
        Ok(())
    })
}

/// Majority-correct probability for `len` workers of individual accuracy.
#[no_mangle]
pub unsafe extern "C" fn crowdgate_exact_majority_prob(
    accuracies: *const f64,
    len: usize,
    result: *mut f64,
) -> i32 {
    guard(|| {
        if accuracies.is_null() && len > 0 {
            return Err(null("accuracies"));
        }
        let slice = if len == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(accuracies, len)
        };
        *out(result, "result")? = prediction::exact_majority_prob(slice)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn crowdgate_conservative_worker_count(
    target: f64,
    mu: f64,
    result: *mut usize,
) -> i32 {
    guard(|| {
        *out(result, "result")? = prediction::conservative_worker_count(target, mu)?;
        Ok(())
    })
}

/// Both worker counts and the expected accuracy at the refined count.
#[no_mangle]
pub unsafe extern "C" fn crowdgate_refined_worker_count(
    target: f64,
    mu: f64,
    conservative_n: *mut usize,
    refined_n: *mut usize,
    expected_accuracy: *mut f64,
) -> i32 {
    guard(|| {
        let (c, r, a) = (
            out(conservative_n, "conservative_n")?,
            out(refined_n, "refined_n")?,
            out(expected_accuracy, "expected_accuracy")?,
        );
        let p = prediction::refined_worker_count(target, mu)?;
        *c = p.conservative_n;
        *r = p.refined_n;
        *a = p.expected_accuracy_at_refined;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn crowdgate_worker_confidence(
    accuracy: f64,
    m: usize,
    result: *mut f64,
) -> i32 {
    guard(|| {
        *out(result, "result")? = verification::worker_confidence(accuracy, m)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn crowdgate_estimate_domain_size(
    k: usize,
    epsilon: f64,
    result: *mut usize,
) -> i32 {
    guard(|| {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Failure::Code(
                CROWDGATE_ERR_INVALID_ARGUMENT,
                format!("epsilon {epsilon} is outside (0, 1)"),
            ));
        }
        *out(result, "result")? = verification::estimate_domain_size(k, epsilon);
        Ok(())
    })
}

/// `(worker_fee + platform_fee) * n`.
#[no_mangle]
pub unsafe extern "C" fn crowdgate_hit_cost(
    worker_fee: f64,
    platform_fee: f64,
    n: usize,
    result: *mut f64,
) -> i32 {
    guard(|| {
        *out(result, "result")? = CostModel::new(worker_fee, platform_fee)?.hit_cost(n);
        Ok(())
    })
}

/// Verifies a JSON document `{domain, observation, profiles}` and writes a
/// JSON report to `*report`, to be released with `crowdgate_string_free`.
#[no_mangle]
pub unsafe extern "C" fn crowdgate_verify_json(
    document: *const c_char,
    report: *mut *mut c_char,
) -> i32 {
    guard(|| {
        let slot = out(report, "report")?;
        let doc: VerifyDocument = serde_json::from_str(string(document, "document")?)?;
        let r = verify_report(
            &doc.observation,
            &doc.profiles,
            &doc.domain,
            &VerificationConfig::default(),
        )?;
        *slot = into_c_string(serde_json::to_string(&r)?);
        Ok(())
    })
}

/// Opaque online verification session.
pub struct CrowdgateSession {
    inner: OnlineSession,
}

/// Opens a session. `domain_json` is an answer domain such as
/// `{"labels":["yes","no"],"mode":"fixed"}`; `strategy` is one of `none`,
/// `minmax`, `minexp`, `expmax`.
#[no_mangle]
pub unsafe extern "C" fn crowdgate_session_new(
    question_id: *const c_char,
    domain_json: *const c_char,
    n_total: usize,
    mu_remaining: f64,
    strategy: *const c_char,
    session: *mut *mut CrowdgateSession,
) -> i32 {
    guard(|| {
        let slot = out(session, "session")?;
        let domain: AnswerDomain = serde_json::from_str(string(domain_json, "domain_json")?)?;
        let strategy: Strategy = string(strategy, "strategy")?.parse()?;
        let inner = OnlineSession::new(
            string(question_id, "question_id")?,
            domain,
            OnlineSettings {
                n_total,
                mu_remaining,
                strategy,
                cfg: VerificationConfig::default(),
            },
        )?;
        *slot = Box::into_raw(Box::new(CrowdgateSession { inner }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn crowdgate_session_free(session: *mut CrowdgateSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

/// Records one answer from a worker of the given accuracy.
#[no_mangle]
pub unsafe extern "C" fn crowdgate_session_push(
    session: *mut CrowdgateSession,
    worker_id: *const c_char,
    answer: *const c_char,
    accuracy: f64,
) -> i32 {
    guard(|| {
        let s = out(session, "session")?;
        let worker = string(worker_id, "worker_id")?;
        let vote = Vote::new(worker, string(answer, "answer")?);
        s.inner
            .push_answer(vote, &WorkerProfile::new(worker, accuracy))?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn crowdgate_session_confidence(
    session: *const CrowdgateSession,
    label: *const c_char,
    result: *mut f64,
) -> i32 {
    guard(|| {
        let s = session.as_ref().ok_or_else(|| null("session"))?;
        *out(result, "result")? = s.inner.confidence(string(label, "label")?)?;
        Ok(())
    })
}

/// Current confidence table as JSON; `null` before the first answer.
#[no_mangle]
pub unsafe extern "C" fn crowdgate_session_table_json(
    session: *const CrowdgateSession,
    table: *mut *mut c_char,
) -> i32 {
    guard(|| {
        let s = session.as_ref().ok_or_else(|| null("session"))?;
        let slot = out(table, "table")?;
        *slot = into_c_string(serde_json::to_string(&s.inner.table())?);
        Ok(())
    })
}

/// Evaluates the stopping bracket, writing it as JSON and whether the
/// session's strategy would stop.
#[no_mangle]
pub unsafe extern "C" fn crowdgate_session_evaluate(
    session: *const CrowdgateSession,
    should_stop: *mut bool,
    evaluation: *mut *mut c_char,
) -> i32 {
    guard(|| {
        let s = session.as_ref().ok_or_else(|| null("session"))?;
        let stop = out(should_stop, "should_stop")?;
        let e = s.inner.evaluate_termination()?;
        *stop = e.should_stop;
        if let Some(slot) = evaluation.as_mut() {
            *slot = into_c_string(serde_json::to_string(&e)?);
        }
        Ok(())
    })
}

/// One of the `CROWDGATE_STATE_*` values.
#[no_mangle]
pub unsafe extern "C" fn crowdgate_session_state(
    session: *const CrowdgateSession,
    state: *mut i32,
) -> i32 {
    guard(|| {
        let s = session.as_ref().ok_or_else(|| null("session"))?;
        *out(state, "state")? = match s.inner.state() {
            SessionState::Collecting => CROWDGATE_STATE_COLLECTING,
            SessionState::Terminated => CROWDGATE_STATE_TERMINATED,
            SessionState::Exhausted => CROWDGATE_STATE_EXHAUSTED,
        };
        Ok(())
    })
}
