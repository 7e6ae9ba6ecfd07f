use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use flamelab_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 512];
    let mut n = 0usize;
    let st = unsafe { fl_last_error_message(buf.as_mut_ptr(), buf.len(), &mut n) };
    assert_eq!(st, FlStatus::Ok);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

#[test]
fn steady_state_round_trip() {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { fl_rs_steady_new(1, 1, 0.5, 128, &mut h) }, FlStatus::Ok);
    let mut s = FlRsSteadySummary::default();
    assert_eq!(unsafe { fl_rs_steady_summary(h, &mut s) }, FlStatus::Ok);
    assert!(s.residual < 1e-8);
    assert_eq!(s.interior_zeros, 0);

    let mut n = 0usize;
    let st = unsafe { fl_rs_steady_profile(h, ptr::null_mut(), ptr::null_mut(), 0, &mut n) };
    assert_eq!(st, FlStatus::BufferTooSmall);
    assert_eq!(n, 257);
    let (mut x, mut v) = (vec![0.0; n], vec![0.0; n]);
    let st = unsafe { fl_rs_steady_profile(h, x.as_mut_ptr(), v.as_mut_ptr(), n, &mut n) };
    assert_eq!(st, FlStatus::Ok);
    assert_eq!(x[0], 0.0);
    assert!(v[n / 2] > 0.0);

    let mut stable = -1;
    assert_eq!(unsafe { fl_rs_steady_is_stable(h, &mut stable) }, FlStatus::Ok);
    assert_eq!(stable, 1);
    unsafe { fl_rs_steady_free(h) };
}

#[test]
fn errors_are_reported() {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { fl_rs_steady_new(2, 1, 0.5, 128, &mut h) }, FlStatus::InvalidArgument);
    assert!(h.is_null());
    assert!(last_error().contains("no branch"));
    assert_eq!(unsafe { fl_rs_steady_new(1, 0, 0.5, 128, &mut h) }, FlStatus::InvalidArgument);
    assert_eq!(unsafe { fl_rs_steady_summary(ptr::null(), ptr::null_mut()) }, FlStatus::NullPointer);
    let mut t = 0.0;
    assert_eq!(unsafe { fl_orbit_period(0.5, 1.5, &mut t) }, FlStatus::InvalidArgument);
    assert_eq!(unsafe { fl_orbit_period(0.25, 1e-4, &mut t) }, FlStatus::Ok);
    assert!((t - std::f64::consts::PI).abs() < 1e-3);
    assert_eq!(last_error(), "");
    // a tiny message buffer is refused
    let mut small = [0 as std::ffi::c_char; 1];
    let mut n = 0;
    unsafe { fl_rs_steady_new(2, 1, 0.5, 128, &mut h) };
    assert_eq!(unsafe { fl_last_error_message(small.as_mut_ptr(), 1, &mut n) }, FlStatus::BufferTooSmall);
    assert!(n > 0);
}

#[test]
fn pole_sets() {
    let mut h = ptr::null_mut();
    let h0 = [1.0];
    assert_eq!(unsafe { fl_poles_new(0.2, h0.as_ptr(), 1, ptr::null(), 0, &mut h) }, FlStatus::Ok);
    let mut f = [0.0];
    let mut n = 0;
    assert_eq!(unsafe { fl_poles_force(h, f.as_mut_ptr(), 1, &mut n) }, FlStatus::Ok);
    assert!((f[0] - (0.2 / 1f64.tanh() - 1.0)).abs() < 1e-15);
    let mut conv = 0;
    assert_eq!(unsafe { fl_poles_flow_to_steady(h, 1e4, 1e-8, &mut conv) }, FlStatus::Ok);
    assert_eq!(conv, 1);
    let mut y = [0.0];
    assert_eq!(unsafe { fl_poles_heights(h, y.as_mut_ptr(), 1, &mut n) }, FlStatus::Ok);
    assert!((y[0] - 0.2f64.atanh()).abs() < 1e-10);
    let mut class = -1;
    assert_eq!(unsafe { fl_poles_classify(h, &mut class) }, FlStatus::Ok);
    assert_eq!(class, 0);
    let mut u = 0.0;
    assert_eq!(unsafe { fl_poles_liapunov(h, &mut u) }, FlStatus::Ok);
    assert!(u.is_finite());
    unsafe { fl_poles_free(h) };

    let mut c = ptr::null_mut();
    assert_eq!(unsafe { fl_poles_coalescent(2, 0.5, 1, &mut c) }, FlStatus::InvalidArgument);
    assert_eq!(unsafe { fl_poles_coalescent(2, 0.25, -1, &mut c) }, FlStatus::Ok);
    assert_eq!(unsafe { fl_poles_heights(c, ptr::null_mut(), 0, &mut n) }, FlStatus::BufferTooSmall);
    assert_eq!(n, 2);
    unsafe { fl_poles_free(c) };
    assert_eq!(unsafe { fl_poles_new(0.2, ptr::null(), 2, ptr::null(), 0, &mut c) }, FlStatus::NullPointer);
}

#[test]
fn version_and_count() {
    let v = unsafe { CStr::from_ptr(fl_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
    assert_eq!(fl_rs_steady_count(0.2), 4);
    assert_eq!(fl_rs_steady_count(1.5), 0);
}

fn static_lib() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let dir = exe.parent()?.parent()?;
    let lib = dir.join("libflamelab_ffi.a");
    lib.exists().then_some(lib)
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "flamelab.h"

int main(void) {
    FlRsSteady *h = NULL;
    if (fl_rs_steady_new(1, 1, 0.5, 64, &h) != FL_STATUS_OK) return 1;
    FlRsSteadySummary s;
    if (fl_rs_steady_summary(h, &s) != FL_STATUS_OK) return 2;
    fl_rs_steady_free(h);
    if (fl_rs_steady_new(3, 1, 0.5, 64, &h) != FL_STATUS_INVALID_ARGUMENT) return 3;
    char msg[256];
    size_t n = 0;
    if (fl_last_error_message(msg, sizeof msg, &n) != FL_STATUS_OK || n == 0) return 4;
    printf("%.12f %s\n", s.w0, fl_version());
    return 0;
}
"#;

#[test]
fn header_compiles_and_links_from_c() {
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("main.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let Some(lib) = static_lib() else {
        // without the archive, at least check that the header parses
        let st = Command::new("cc")
            .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"])
            .arg("-I")
            .arg(&include)
            .arg(&src)
            .status()
            .unwrap();
        assert!(st.success());
        return;
    };
    let exe = tmp.path().join("main");
    let st = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror"])
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&exe)
        .status()
        .unwrap();
    assert!(st.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("0.99753476622"), "{text}");
}
