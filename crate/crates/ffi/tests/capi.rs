use std::ffi::{CStr, CString};
use std::ptr;

use rvp_ffi::*;

const CONFIG: &str = "scenario = \"radial-shell\"\nn = 64\ndt = 0.01\nt_end = 0.05\n";

fn last_error() -> String {
    let p = rvp_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

unsafe fn take(s: *mut std::ffi::c_char) -> String {
    assert!(!s.is_null());
    let out = CStr::from_ptr(s).to_string_lossy().into_owned();
    rvp_string_free(s);
    out
}

fn parse(text: &str) -> (RvpStatus, *mut RvpConfig) {
    let c = CString::new(text).unwrap();
    let mut cfg = ptr::null_mut();
    let status = unsafe { rvp_config_parse(c.as_ptr(), &mut cfg) };
    (status, cfg)
}

#[test]
fn parse_error_reports_line_and_key() {
    let (status, cfg) = parse("scenario = \"radial-shell\"\nn = 64\ndt = -1\nt_end = 1\n");
    assert_eq!(status, RvpStatus::Parse);
    assert!(cfg.is_null());
    let msg: serde_json::Value = serde_json::from_str(&last_error()).unwrap();
    assert_eq!(msg["error"]["kind"], "parse");
    assert_eq!(msg["error"]["key"], "dt");
    assert_eq!(msg["error"]["line"], 3);
}

#[test]
fn null_arguments_are_rejected() {
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { rvp_config_parse(ptr::null(), &mut cfg) }, RvpStatus::NullPointer);
    assert_eq!(unsafe { rvp_session_run(ptr::null_mut()) }, RvpStatus::NullPointer);
    assert!(unsafe { rvp_config_hash(ptr::null()) }.is_null());
    assert!(unsafe { rvp_session_time(ptr::null()) }.is_nan());
    unsafe {
        rvp_config_free(ptr::null_mut());
        rvp_session_free(ptr::null_mut());
        rvp_string_free(ptr::null_mut());
    }
}

#[test]
fn invalid_utf8_is_reported() {
    let bytes = CString::new(vec![b'n', b'=', 0xff]).unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { rvp_config_parse(bytes.as_ptr(), &mut cfg) }, RvpStatus::InvalidUtf8);
}

#[test]
fn session_round_trip_through_checkpoint() {
    let (status, cfg) = parse(CONFIG);
    assert_eq!(status, RvpStatus::Ok);
    unsafe {
        let hash = take(rvp_config_hash(cfg));
        assert_eq!(hash.len(), 64);

        let mut s = ptr::null_mut();
        assert_eq!(rvp_session_new(cfg, &mut s), RvpStatus::Ok);
        assert_eq!(rvp_session_particle_count(s), 64);
        assert_eq!(rvp_session_status(s), RvpStatus::NotRun);
        assert!(rvp_session_diagnostics_csv(s).is_null());
        assert_eq!(last_error(), "session has not been run");

        let start = CString::new(take(rvp_session_checkpoint_json(s))).unwrap();
        assert_eq!(rvp_session_run(s), RvpStatus::Ok);
        assert_eq!(rvp_session_step(s), 5);
        assert!((rvp_session_time(s) - 0.05).abs() < 1e-12);
        let csv = take(rvp_session_diagnostics_csv(s));
        assert_eq!(csv.lines().count(), 7);

        let mut r = ptr::null_mut();
        assert_eq!(rvp_session_from_checkpoint(start.as_ptr(), &mut r), RvpStatus::Ok);
        assert_eq!(rvp_session_run(r), RvpStatus::Ok);
        assert_eq!(take(rvp_session_diagnostics_csv(r)), csv);

        rvp_session_free(r);
        rvp_session_free(s);
        rvp_config_free(cfg);
    }
}

#[test]
fn seed_changes_hash() {
    let (_, cfg) = parse(CONFIG);
    unsafe {
        let a = take(rvp_config_hash(cfg));
        assert_eq!(rvp_config_set_seed(cfg, 9), RvpStatus::Ok);
        let b = take(rvp_config_hash(cfg));
        assert_ne!(a, b);
        rvp_config_free(cfg);
    }
}

#[test]
fn run_writes_artifacts_and_refuses_overwrite() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let out_c = CString::new(out.to_str().unwrap()).unwrap();
    let (_, cfg) = parse(CONFIG);
    unsafe {
        let mut written = ptr::null_mut();
        assert_eq!(rvp_run(cfg, out_c.as_ptr(), &mut written), RvpStatus::Ok);
        assert_eq!(take(written), out.display().to_string());
        assert!(out.join("diagnostics.csv").is_file());
        assert!(out.join("manifest.json").is_file());
        assert_eq!(rvp_run(cfg, out_c.as_ptr(), ptr::null_mut()), RvpStatus::OutputExists);
        rvp_config_free(cfg);
    }
}

#[test]
fn cutoff_matches_core() {
    assert_eq!(rvp_phi(0.5), 0.125);
    assert_eq!(rvp_phi(1.5), 1.875);
    assert_eq!(rvp_cutoff_phi(3.0, 1), rvp_phi(1.5));
    let v = unsafe { CStr::from_ptr(rvp_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/rvp.h")).unwrap();
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 15);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    assert!(header.contains("typedef struct RvpSession RvpSession;"));
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let dir = env!("CARGO_MANIFEST_DIR");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    for lang in ["c", "c++"] {
        let status = std::process::Command::new(&cc)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang])
            .arg(format!("-I{dir}/include"))
            .arg(format!("{dir}/examples/smoke.c"))
            .status();
        match status {
            Ok(s) => assert!(s.success(), "{lang} syntax check failed"),
            Err(e) => panic!("C compiler `{cc}` unavailable: {e}"),
        }
    }
}
