use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use crowdgate_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take(s: *mut std::ffi::c_char) -> String {
    let owned = CStr::from_ptr(s).to_str().unwrap().to_owned();
    crowdgate_string_free(s);
    owned
}

unsafe fn last_error() -> String {
    CStr::from_ptr(crowdgate_last_error())
        .to_string_lossy()
        .into_owned()
}

#[test]
fn prediction_calls() {
    unsafe {
        let mut p = 0.0;
        assert_eq!(
            crowdgate_expected_majority_prob(3, 0.7, &mut p),
            CROWDGATE_OK
        );
        assert!((p - 0.784).abs() < 1e-12);
        assert!(crowdgate_last_error().is_null());

        assert_eq!(crowdgate_expected_majority_prob(4, 0.7, &mut p), 30);
        assert!(last_error().contains('4'));

        let acc = [0.7, 0.7, 0.7];
        assert_eq!(
            crowdgate_exact_majority_prob(acc.as_ptr(), 3, &mut p),
            CROWDGATE_OK
        );
        assert!((p - 0.784).abs() < 1e-12);
        assert_eq!(
            crowdgate_exact_majority_prob(ptr::null(), 3, &mut p),
            CROWDGATE_ERR_NULL_POINTER
        );

        let (mut cons, mut refined, mut acc) = (0usize, 0usize, 0.0);
        assert_eq!(
            crowdgate_refined_worker_count(0.9, 0.7, &mut cons, &mut refined, &mut acc),
            0
        );
        assert_eq!((cons, refined), (29, 9));
        assert!(acc >= 0.9);
        assert_eq!(crowdgate_conservative_worker_count(0.9, 0.7, &mut cons), 0);
        assert_eq!(cons, 29);
        assert_eq!(crowdgate_conservative_worker_count(0.9, 0.5, &mut cons), 31);
        assert_eq!(
            crowdgate_refined_worker_count(0.9, 0.51, &mut cons, &mut refined, &mut acc),
            33
        );
        assert_eq!(
            crowdgate_refined_worker_count(0.9, 0.7, ptr::null_mut(), &mut refined, &mut acc),
            CROWDGATE_ERR_NULL_POINTER
        );
    }
}

#[test]
fn verification_helpers() {
    unsafe {
        let mut v = 0.0;
        assert_eq!(crowdgate_worker_confidence(0.5, 2, &mut v), 0);
        assert!(v.abs() < 1e-15);
        assert_eq!(crowdgate_worker_confidence(0.5, 1, &mut v), 40);

        let mut m = 0usize;
        assert_eq!(crowdgate_estimate_domain_size(4, 0.05, &mut m), 0);
        assert_eq!(m, 39);
        assert_eq!(
            crowdgate_estimate_domain_size(4, 1.5, &mut m),
            CROWDGATE_ERR_INVALID_ARGUMENT
        );

        assert_eq!(crowdgate_hit_cost(0.01, 0.005, 9, &mut v), 0);
        assert!((v - 0.135).abs() < 1e-15);
        assert_eq!(crowdgate_hit_cost(-1.0, 0.0, 9, &mut v), 14);
    }
}

const SENTIMENT_DOC: &str = r#"{
  "domain": {"labels": ["pos", "neu", "neg"], "mode": "fixed"},
  "observation": {"question_id": "q1", "n_total": 5, "votes": [
    {"worker_id": "w1", "answer": "pos"},
    {"worker_id": "w2", "answer": "pos"},
    {"worker_id": "w3", "answer": "neu"},
    {"worker_id": "w4", "answer": "neg"},
    {"worker_id": "w5", "answer": "pos"}]},
  "profiles": {
    "w1": {"accuracy": 0.54, "golden_correct": 0, "golden_total": 0},
    "w2": {"accuracy": 0.31, "golden_correct": 0, "golden_total": 0},
    "w3": {"accuracy": 0.49, "golden_correct": 0, "golden_total": 0},
    "w4": {"accuracy": 0.73, "golden_correct": 0, "golden_total": 0},
    "w5": {"accuracy": 0.46, "golden_correct": 0, "golden_total": 0}}
}"#;

#[test]
fn verify_json_document() {
    unsafe {
        let mut report = ptr::null_mut();
        assert_eq!(crowdgate_verify_json(c(SENTIMENT_DOC).as_ptr(), &mut report), 0);
        let r: serde_json::Value = serde_json::from_str(&take(report)).unwrap();
        assert_eq!(r["verification"], "neg");
        assert_eq!(r["half_voting"], "pos");
        assert_eq!(r["majority_voting"], "pos");
        let neg = r["table"]["entries"]["neg"].as_f64().unwrap();
        assert!((neg - 0.495).abs() < 5e-4);

        assert_eq!(crowdgate_verify_json(c("{").as_ptr(), &mut report), 91);
        assert!(!last_error().is_empty());
        assert_eq!(
            crowdgate_verify_json(ptr::null(), &mut report),
            CROWDGATE_ERR_NULL_POINTER
        );
        let bad = [b'{', 0xff, 0];
        assert_eq!(
            crowdgate_verify_json(bad.as_ptr().cast(), &mut report),
            CROWDGATE_ERR_INVALID_UTF8
        );
    }
}

#[test]
fn session_lifecycle() {
    unsafe {
        let domain = c(r#"{"labels": ["yes", "no"], "mode": "fixed"}"#);
        let mut s = ptr::null_mut();
        assert_eq!(
            crowdgate_session_new(
                c("q").as_ptr(),
                domain.as_ptr(),
                7,
                0.9,
                c("expmax").as_ptr(),
                &mut s
            ),
            0
        );
        let mut conf = 0.0;
        assert_eq!(
            crowdgate_session_confidence(s, c("yes").as_ptr(), &mut conf),
            0
        );
        assert_eq!(conf, 0.5);

        let mut stop = false;
        assert_eq!(
            crowdgate_session_evaluate(s, &mut stop, ptr::null_mut()),
            52
        );

        let mut table = ptr::null_mut();
        assert_eq!(crowdgate_session_table_json(s, &mut table), 0);
        assert_eq!(take(table), "null");

        let mut state = -1;
        for (i, w) in ["a", "b", "c"].iter().enumerate() {
            assert_eq!(crowdgate_session_state(s, &mut state), 0);
            assert_eq!(state, CROWDGATE_STATE_COLLECTING, "before vote {i}");
            assert_eq!(
                crowdgate_session_push(s, c(w).as_ptr(), c("yes").as_ptr(), 0.9),
                0
            );
        }
        // three agreeing votes of accuracy 0.9 out of 7 stop expmax
        assert_eq!(crowdgate_session_state(s, &mut state), 0);
        assert_eq!(state, CROWDGATE_STATE_TERMINATED);
        assert_eq!(
            crowdgate_session_push(s, c("d").as_ptr(), c("yes").as_ptr(), 0.9),
            50
        );

        let mut eval = ptr::null_mut();
        assert_eq!(crowdgate_session_evaluate(s, &mut stop, &mut eval), 0);
        assert!(stop);
        let e: serde_json::Value = serde_json::from_str(&take(eval)).unwrap();
        assert_eq!(e["r1"], "yes");

        assert_eq!(crowdgate_session_table_json(s, &mut table), 0);
        let t: serde_json::Value = serde_json::from_str(&take(table)).unwrap();
        assert_eq!(t["best"], "yes");
        crowdgate_session_free(s);
        crowdgate_session_free(ptr::null_mut());
    }
}

#[test]
fn session_errors() {
    unsafe {
        let domain = c(r#"{"labels": ["yes", "no"], "mode": "fixed"}"#);
        let mut s = ptr::null_mut();
        assert_eq!(
            crowdgate_session_new(
                c("q").as_ptr(),
                domain.as_ptr(),
                3,
                0.9,
                c("fastest").as_ptr(),
                &mut s
            ),
            72
        );
        assert!(s.is_null());
        assert_eq!(
            crowdgate_session_new(
                c("q").as_ptr(),
                domain.as_ptr(),
                3,
                0.9,
                c("none").as_ptr(),
                &mut s
            ),
            0
        );
        assert_eq!(
            crowdgate_session_push(s, c("a").as_ptr(), c("maybe").as_ptr(), 0.9),
            11
        );
        assert_eq!(
            crowdgate_session_push(s, c("a").as_ptr(), c("yes").as_ptr(), 0.9),
            0
        );
        assert_eq!(
            crowdgate_session_push(s, c("a").as_ptr(), c("no").as_ptr(), 0.9),
            51
        );
        assert_eq!(
            crowdgate_session_push(ptr::null_mut(), c("a").as_ptr(), c("no").as_ptr(), 0.9),
            1
        );
        crowdgate_session_free(s);
        crowdgate_string_free(ptr::null_mut());
    }
}

#[test]
fn header_is_valid_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/crowdgate.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "crowdgate_verify_json",
        "crowdgate_session_new",
        "CROWDGATE_ERR_NULL_POINTER",
    ] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let status = match Command::new("cc")
        .args(["-fsyntax-only", "-x", "c"])
        .arg(&header)
        .status()
    {
        Ok(s) => s,
        // no C compiler available
        Err(_) => return,
    };
    assert!(status.success());
}
