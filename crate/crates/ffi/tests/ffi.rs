use std::ffi::{c_char, CStr};
use std::process::Command;
use std::ptr;

use cuspwave_ffi::*;

fn last_error() -> String {
    unsafe {
        let needed = cw_last_error_message(ptr::null_mut(), 0);
        if needed == 0 {
            return String::new();
        }
        let mut buf = vec![0 as c_char; needed];
        assert_eq!(cw_last_error_message(buf.as_mut_ptr(), buf.len()), needed);
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

#[test]
fn kernel_at_pi_for_alpha_one() {
    let (mut value, mut error) = (0.0, 0.0);
    let status = unsafe { cw_kernel_eval(1.0, std::f64::consts::PI, &mut value, &mut error) };
    assert_eq!(status, CwStatus::Ok);
    let expected = -(4.0f64).ln() / (2.0 * std::f64::consts::PI);
    assert!((value - expected).abs() < 1e-12);
    assert_eq!(last_error(), "");
}

#[test]
fn singular_point_reports_status_and_message() {
    let (mut value, mut error) = (0.0, 0.0);
    let status = unsafe { cw_kernel_eval(0.5, 0.0, &mut value, &mut error) };
    assert_eq!(status, CwStatus::Singularity);
    assert!(last_error().contains("singular"));
}

#[test]
fn null_outputs_are_rejected() {
    assert_eq!(
        unsafe { cw_kernel_l1_norm(0.5, ptr::null_mut()) },
        CwStatus::NullPointer
    );
    assert_eq!(unsafe { cw_branch_len(ptr::null()) }, 0);
    unsafe {
        cw_problem_free(ptr::null_mut());
        cw_branch_free(ptr::null_mut());
    }
}

#[test]
fn l1_norm_matches_library() {
    let mut value = 0.0;
    assert_eq!(unsafe { cw_kernel_l1_norm(0.5, &mut value) }, CwStatus::Ok);
    assert!((value - 1.37173).abs() < 1e-5);
}

#[test]
fn aliasing_problem_is_rejected() {
    let mut problem = ptr::null_mut();
    let status = unsafe { cw_problem_new(0.5, CwKind::Abs, 2.0, 1e-2, 64, 128, &mut problem) };
    assert_eq!(status, CwStatus::Aliasing);
    assert!(problem.is_null());
}

#[test]
fn branch_round_trip() {
    unsafe {
        let mut problem = ptr::null_mut();
        assert_eq!(
            cw_problem_new(0.5, CwKind::Abs, 2.0, 1e-2, 64, 256, &mut problem),
            CwStatus::Ok
        );
        let mut branch = ptr::null_mut();
        assert_eq!(cw_branch_follow(problem, 1, 5e-2, &mut branch), CwStatus::Ok);
        let len = cw_branch_len(branch);
        assert!(len > 2);
        let mut reason = CwTermination::Error;
        assert_eq!(cw_branch_termination(branch, &mut reason), CwStatus::Ok);
        assert_ne!(reason, CwTermination::Error);
        let mut point = CwPoint::default();
        assert_eq!(cw_branch_point(branch, len - 1, &mut point), CwStatus::Ok);
        assert!(point.max_value < point.mu_eps && point.residual_norm < 1e-9);
        assert_eq!(cw_branch_point(branch, len, &mut point), CwStatus::InvalidArgument);
        let mut values = vec![0.0; 256];
        assert_eq!(
            cw_branch_wave(problem, branch, len - 1, values.as_mut_ptr(), 255),
            CwStatus::BufferTooSmall
        );
        assert_eq!(
            cw_branch_wave(problem, branch, len - 1, values.as_mut_ptr(), 256),
            CwStatus::Ok
        );
        let max = values.iter().copied().fold(f64::MIN, f64::max);
        assert_eq!(max, values[128]);
        assert!((max - point.max_value).abs() < 1e-14);
        cw_branch_free(branch);
        cw_problem_free(problem);
    }
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(cw_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let include = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
    let dir = tempfile::tempdir().unwrap();
    let source = dir.path().join("probe.c");
    std::fs::write(
        &source,
        "#include \"cuspwave.h\"\nint main(void) { CwPoint p; CwStatus s = cw_kernel_l1_norm(0.5, &p.c); return s == CW_STATUS_OK ? 0 : 1; }\n",
    )
    .unwrap();
    let Ok(output) = Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-I", include])
        .arg(&source)
        .output()
    else {
        eprintln!("no C compiler available; skipping");
        return;
    };
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
}
