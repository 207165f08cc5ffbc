use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use qworlds_ffi::*;

fn world(dim: usize, seed: Option<u64>) -> *mut QwWorld {
    let mut w = ptr::null_mut();
    let status = unsafe {
        match seed {
            Some(s) => qw_world_random(dim, s, &mut w),
            None => qw_world_standard(dim, &mut w),
        }
    };
    assert_eq!(status, QwStatus::Ok);
    w
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(qw_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn chsh_through_the_abi() {
    let mut r = QwChshReport::default();
    assert_eq!(unsafe { qw_chsh(std::f64::consts::FRAC_PI_4, &mut r) }, QwStatus::Ok);
    assert!((r.quantum_value - 2.0 * 2f64.sqrt()).abs() < 1e-9);
    assert_eq!(r.classical_bound, 2.0);
    assert!(r.violated);
    assert_eq!(unsafe { qw_chsh(f64::NAN, &mut r) }, QwStatus::InvalidArgument);
    assert_eq!(unsafe { qw_chsh(0.0, ptr::null_mut()) }, QwStatus::NullPointer);
}

#[test]
fn world_handles() {
    let w = world(4, Some(3));
    assert_eq!(unsafe { qw_world_dim(w) }, 4);
    let mut json = ptr::null_mut();
    assert_eq!(unsafe { qw_world_to_json(w, &mut json) }, QwStatus::Ok);
    let text = unsafe { CStr::from_ptr(json) }.to_owned();
    let mut back = ptr::null_mut();
    assert_eq!(unsafe { qw_world_from_json(text.as_ptr(), &mut back) }, QwStatus::Ok);
    assert_eq!(unsafe { qw_world_dim(back) }, 4);
    unsafe {
        qw_string_free(json);
        qw_world_free(w);
        qw_world_free(back);
        qw_world_free(ptr::null_mut());
        assert_eq!(qw_world_dim(ptr::null()), 0);
    }

    let mut out = ptr::null_mut();
    assert_eq!(unsafe { qw_world_standard(1, &mut out) }, QwStatus::InvalidArgument);
    assert!(last_error().contains("at least 2"));
    let bad = CString::new(r#"{"dim":2,"basis":[[[1,0],[0,0]],[[1,0],[0,0]]]}"#).unwrap();
    assert_eq!(unsafe { qw_world_from_json(bad.as_ptr(), &mut out) }, QwStatus::NotOrthonormal);
    let junk = CString::new("{").unwrap();
    assert_ne!(unsafe { qw_world_from_json(junk.as_ptr(), &mut out) }, QwStatus::Ok);
}

#[test]
fn born_and_transition_matrix() {
    let z = world(2, None);
    let mut h = ptr::null_mut();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let doc = CString::new(format!(r#"{{"dim":2,"basis":[[[{s},0],[{s},0]],[[{s},0],[-{s},0]]]}}"#)).unwrap();
    assert_eq!(unsafe { qw_world_from_json(doc.as_ptr(), &mut h) }, QwStatus::Ok);

    let mut v = 0.0;
    let st = unsafe { qw_born_expectation(z, [1.0, 0.0].as_ptr(), h, [1.0, -1.0].as_ptr(), 2, &mut v) };
    assert_eq!(st, QwStatus::Ok);
    assert!(v.abs() < 1e-12);
    let st = unsafe { qw_born_expectation(z, [1.0, 0.0].as_ptr(), z, [3.0, -1.0].as_ptr(), 2, &mut v) };
    assert_eq!(st, QwStatus::Ok);
    assert_eq!(v, 3.0);
    let st = unsafe { qw_born_expectation(z, [0.7, 0.7].as_ptr(), h, [1.0, -1.0].as_ptr(), 2, &mut v) };
    assert_eq!(st, QwStatus::InvalidState);

    let mut t = [0.0; 4];
    assert_eq!(unsafe { qw_transition_matrix(z, h, t.as_mut_ptr(), 4) }, QwStatus::Ok);
    for x in t {
        assert!((x - 0.5).abs() < 1e-12);
    }
    let three = world(3, None);
    assert_eq!(unsafe { qw_transition_matrix(z, three, t.as_mut_ptr(), 4) }, QwStatus::DimensionMismatch);
    unsafe {
        qw_world_free(z);
        qw_world_free(h);
        qw_world_free(three);
    }
}

#[test]
fn envelopes_through_the_abi() {
    let z = world(2, None);
    let re = [0.0, 1.0, 1.0, 0.0];
    let im = [0.0; 4];
    let mut r = QwEnvelopeResult::default();

    let st =
        unsafe { qw_solve_envelopes(z, [0.5, 0.5].as_ptr(), re.as_ptr(), im.as_ptr(), 2, 1e3, 1e-6, 50_000, &mut r) };
    assert_eq!(st, QwStatus::Ok);
    assert!((r.upper - 1.0).abs() < 1e-3 && (r.lower + 1.0).abs() < 1e-3);

    let st =
        unsafe { qw_solve_envelopes(z, [1.0, 0.0].as_ptr(), re.as_ptr(), im.as_ptr(), 2, 1e3, 1e-6, 50_000, &mut r) };
    assert_eq!(st, QwStatus::Ok);
    assert!(r.converged && r.upper.abs() < 2e-2 && r.lower.abs() < 2e-2);

    let st = unsafe { qw_solve_envelopes(z, [1.0, 0.0].as_ptr(), re.as_ptr(), im.as_ptr(), 2, 1e3, 1e-6, 5, &mut r) };
    assert_eq!(st, QwStatus::NonConvergence);
    assert!(!r.converged);
    assert!(last_error().contains("budget"));

    let not_hermitian = [0.0, 1.0, 0.0, 0.0];
    let st = unsafe {
        qw_solve_envelopes(z, [1.0, 0.0].as_ptr(), not_hermitian.as_ptr(), im.as_ptr(), 2, 1e3, 1e-6, 10, &mut r)
    };
    assert_eq!(st, QwStatus::InvalidArgument);
    unsafe { qw_world_free(z) };
}

#[test]
fn banach_through_the_abi() {
    let mut v = 0.0;
    let st = unsafe {
        qw_banach_limit([100.0, -100.0].as_ptr(), 2, QwTailKind::Periodic, [2.0, 4.0, 6.0].as_ptr(), 3, &mut v)
    };
    assert_eq!(st, QwStatus::Ok);
    assert_eq!(v, 4.0);
    let st = unsafe { qw_banach_limit(ptr::null(), 0, QwTailKind::Convergent, [0.0].as_ptr(), 1, &mut v) };
    assert_eq!(st, QwStatus::Ok);
    assert_eq!(v, 0.0);
    let st = unsafe { qw_banach_limit(ptr::null(), 0, QwTailKind::Convergent, [0.0, 1.0].as_ptr(), 2, &mut v) };
    assert_eq!(st, QwStatus::InvalidArgument);
    let st = unsafe { qw_banach_limit(ptr::null(), 0, QwTailKind::Periodic, ptr::null(), 0, &mut v) };
    assert_eq!(st, QwStatus::InvalidArgument);
}

#[test]
fn header_declares_the_abi() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/qworlds.h")).unwrap();
    for symbol in [
        "qw_last_error",
        "qw_world_standard",
        "qw_world_random",
        "qw_world_from_json",
        "qw_world_to_json",
        "qw_world_free",
        "qw_world_dim",
        "qw_string_free",
        "qw_chsh",
        "qw_born_expectation",
        "qw_transition_matrix",
        "qw_solve_envelopes",
        "qw_banach_limit",
        "typedef struct QwWorld QwWorld",
    ] {
        assert!(header.contains(symbol), "{symbol} missing from header");
    }
}

/// Compiles the C smoke test against the header and the static library.
#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // target/<profile>/deps/ffi-<hash>
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = profile_dir.join("libqworlds_ffi.a");
    if !lib.exists() {
        let st = Command::new(env!("CARGO")).args(["build", "-p", "qworlds-ffi"]).status().unwrap();
        assert!(st.success());
    }
    assert!(lib.exists(), "{} not built", lib.display());

    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let out = Command::new("cc")
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .output()
        .expect("C compiler available");
    assert!(out.status.success(), "cc failed: {}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "ok");
}
