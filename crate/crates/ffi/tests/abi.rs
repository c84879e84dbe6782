use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use formbound_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(fb_last_error()).to_string_lossy().into_owned() }
}

#[test]
fn grid_and_field_lifecycle() {
    unsafe {
        let mut g = ptr::null_mut();
        assert_eq!(fb_grid_new(2, 16, 1.0, &mut g), FbStatus::Ok);
        assert_eq!(fb_grid_len(g), 256);
        let values: Vec<f64> = (0..512).map(|i| i as f64).collect();
        let mut f = ptr::null_mut();
        assert_eq!(fb_field_from_real(g, 2, values.as_ptr(), values.len(), &mut f), FbStatus::Ok);
        assert_eq!(fb_field_components(f), 2);
        let mut buf = vec![0.0; 256];
        assert_eq!(fb_field_copy_real(f, 1, buf.as_mut_ptr(), buf.len()), FbStatus::Ok);
        assert_eq!(buf[0], 256.0);
        assert_eq!(fb_field_copy_real(f, 2, buf.as_mut_ptr(), buf.len()), FbStatus::InvalidArgument);

        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().join("f.fbf").to_str().unwrap()).unwrap();
        assert_eq!(fb_field_save(f, path.as_ptr(), false), FbStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(fb_field_load(path.as_ptr(), 1.0, &mut back), FbStatus::Ok);
        let mut buf2 = vec![0.0; 256];
        assert_eq!(fb_field_copy_real(back, 1, buf2.as_mut_ptr(), buf2.len()), FbStatus::Ok);
        assert_eq!(buf, buf2);

        fb_field_free(back);
        fb_field_free(f);
        fb_grid_free(g);
        fb_grid_free(ptr::null_mut());
        fb_field_free(ptr::null_mut());
    }
}

#[test]
fn errors_are_reported_with_messages() {
    unsafe {
        let mut g = ptr::null_mut();
        assert_eq!(fb_grid_new(4, 16, 1.0, &mut g), FbStatus::InvalidArgument);
        assert!(g.is_null());
        assert!(last_error().contains("grid"));
        assert_eq!(fb_grid_new(2, 16, 1.0, ptr::null_mut()), FbStatus::NullPointer);

        assert_eq!(fb_grid_new(2, 16, 1.0, &mut g), FbStatus::Ok);
        let name = CString::new("no_such_preset").unwrap();
        let mut f = ptr::null_mut();
        assert_eq!(fb_preset_drift(g, name.as_ptr(), 0, &mut f), FbStatus::UnknownPreset);
        let mut v = 0.0;
        let lebesgue = CString::new("lebesgue").unwrap();
        assert_eq!(fb_preset_drift(g, lebesgue.as_ptr(), 0, &mut f), FbStatus::Ok);
        assert_eq!(fb_carleson_constant(f, &mut v), FbStatus::RankMismatch);
        assert_eq!(fb_form_norm(ptr::null(), ptr::null(), ptr::null(), FbFlavor::Homogeneous, &mut v), FbStatus::NullPointer);
        fb_field_free(f);
        fb_grid_free(g);
    }
}

#[test]
fn computations_match_the_library() {
    unsafe {
        let mut g = ptr::null_mut();
        assert_eq!(fb_grid_new(3, 16, 1.0, &mut g), FbStatus::Ok);
        let lebesgue = CString::new("lebesgue").unwrap();
        let mut mu = ptr::null_mut();
        assert_eq!(fb_preset_measure(g, lebesgue.as_ptr(), &mut mu), FbStatus::Ok);
        let mut t = 0.0;
        assert_eq!(fb_trace_constant(mu, FbFlavor::Homogeneous, &mut t), FbStatus::Ok);
        assert!((t - 1.0 / (4.0 * std::f64::consts::PI.powi(2))).abs() <= 1e-6 * t);
        let mut f = 0.0;
        assert_eq!(fb_form_norm(ptr::null(), ptr::null(), mu, FbFlavor::Homogeneous, &mut f), FbStatus::Ok);
        assert!((f - t).abs() <= 1e-6 * t);
        let center = [0.5, 0.5, 0.5];
        let mut cap = 0.0;
        assert_eq!(fb_capacity_ball(g, center.as_ptr(), 0.125, FbFlavor::Homogeneous, &mut cap), FbStatus::Ok);
        assert!(cap > 0.0);
        fb_field_free(mu);
        fb_grid_free(g);
    }
}

#[test]
fn planar_potential_verdict() {
    unsafe {
        let mut g = ptr::null_mut();
        assert_eq!(fb_grid_new(2, 16, 1.0, &mut g), FbStatus::Ok);
        let name = CString::new("constant_potential").unwrap();
        let mut q = ptr::null_mut();
        assert_eq!(fb_preset_potential(g, name.as_ptr(), 0, &mut q), FbStatus::Ok);
        let mut r = ptr::null_mut();
        assert_eq!(fb_verdict(FbPipeline::Homogeneous, ptr::null(), ptr::null(), q, &mut r), FbStatus::Ok);
        assert_eq!(fb_report_overall(r), FbOverall::CertifiedUnboundedN2);
        let json = CStr::from_ptr(fb_report_json(r)).to_str().unwrap();
        assert!(json.contains("certified_unbounded_n2"));
        fb_report_free(r);
        let mut bad = ptr::null_mut();
        assert_eq!(fb_verdict(FbPipeline::Magnetic, q, ptr::null(), q, &mut bad), FbStatus::RankMismatch);
        fb_field_free(q);
        fb_grid_free(g);
    }
}

/// Compile a C program against the generated header and the static library.
#[test]
fn c_program_links_against_header() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let target = manifest.join("../../target").join(if cfg!(debug_assertions) { "debug" } else { "release" });
    let mut build = Command::new(env!("CARGO"));
    build.args(["build", "-p", "formbound-ffi", "--lib"]).current_dir(&manifest);
    if !cfg!(debug_assertions) {
        build.arg("--release");
    }
    assert!(build.status().expect("run cargo").success());
    let lib = target.join("libformbound_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg(manifest.join("tests/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl"])
        .arg("-o")
        .arg(&exe)
        .status()
        .expect("run cc");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}
