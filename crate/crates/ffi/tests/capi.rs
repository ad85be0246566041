use std::ffi::{c_char, CStr};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use betacrit_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    unsafe { bc_last_error_message(buf.as_mut_ptr(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn family(spec: &str, n: usize) -> *mut BcPatch {
    let spec = std::ffi::CString::new(spec).unwrap();
    let mut p = ptr::null_mut();
    let rc = unsafe { bc_patch_from_family(spec.as_ptr(), n, n, -1.0, 1.0, -1.0, 1.0, &mut p) };
    assert_eq!(rc, BC_OK, "{}", last_error());
    p
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(bc_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn solve_round_trip() {
    let data = family("shear(0.3)+bump(0.3,1)", 17);
    let mut init = ptr::null_mut();
    assert_eq!(unsafe { bc_harmonic_extension(data, &mut init) }, BC_OK);
    let config = bc_solver_config_default(1.0);
    let mut sol = ptr::null_mut();
    let mut report = BcSolveReport::default();
    assert_eq!(unsafe { bc_solve(init, &config, &mut sol, &mut report) }, BC_OK, "{}", last_error());
    assert!(report.converged && report.residual_sup <= config.tol_residual);

    let (mut sup, mut l2) = (f64::NAN, f64::NAN);
    assert_eq!(unsafe { bc_residual_norms(sol, 1.0, &mut sup, &mut l2) }, BC_OK);
    assert!(sup <= 1e-10 && l2 <= sup * 2.0);

    let mut d = BcDiagnostics::default();
    assert_eq!(unsafe { bc_diagnostics(sol, 1.0, 5.0, &mut d) }, BC_OK);
    assert_eq!(d.beta, 1.0);
    assert!(d.min_cos_alpha > 0.9 && d.area > 4.0);

    let (mut nx, mut ny) = (0, 0);
    assert_eq!(unsafe { bc_patch_dims(sol, &mut nx, &mut ny) }, BC_OK);
    let (mut f, mut g) = (vec![0.0; nx * ny], vec![0.0; nx * ny]);
    assert_eq!(unsafe { bc_patch_get_values(sol, f.as_mut_ptr(), g.as_mut_ptr(), f.len()) }, BC_OK);

    // rebuilding from the exported arrays gives the same residual
    let mut copy = ptr::null_mut();
    let h = 2.0 / (nx - 1) as f64;
    assert_eq!(unsafe { bc_patch_from_arrays(nx, ny, h, h, -1.0, -1.0, f.as_ptr(), g.as_ptr(), &mut copy) }, BC_OK);
    let (mut sup2, mut l22) = (0.0, 0.0);
    assert_eq!(unsafe { bc_residual_norms(copy, 1.0, &mut sup2, &mut l22) }, BC_OK);
    assert_eq!(sup, sup2);

    for p in [data, init, sol, copy] {
        unsafe { bc_patch_free(p) };
    }
}

#[test]
fn error_codes_and_messages() {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { bc_patch_from_family(ptr::null(), 9, 9, 0.0, 1.0, 0.0, 1.0, &mut p) }, BC_NULL_POINTER);
    assert!(last_error().contains("spec"));

    let bad = c"nope(1)";
    assert_eq!(unsafe { bc_patch_from_family(bad.as_ptr(), 9, 9, 0.0, 1.0, 0.0, 1.0, &mut p) }, BC_INVALID_ARGUMENT);
    assert!(last_error().contains("unknown family"));
    assert!(p.is_null());

    let flip = family("affine(2,0,0,-1)", 9);
    let mut d = BcDiagnostics::default();
    assert_eq!(unsafe { bc_diagnostics(flip, 1.0, 5.0, &mut d) }, BC_NON_SYMPLECTIC);
    let mut out = ptr::null_mut();
    let config = bc_solver_config_default(1.0);
    assert_eq!(unsafe { bc_solve(flip, &config, &mut out, ptr::null_mut()) }, BC_COS_FLOOR_VIOLATED);

    let plane = family("shear(0.3)", 9);
    let mut cfg = config;
    cfg.linear_solver = 7;
    assert_eq!(unsafe { bc_solve(plane, &cfg, &mut out, ptr::null_mut()) }, BC_INVALID_ARGUMENT);
    cfg = config;
    cfg.damping = 2.0;
    assert_eq!(unsafe { bc_solve(plane, &cfg, &mut out, ptr::null_mut()) }, BC_INVALID_ARGUMENT);

    let mut f = vec![0.0; 3];
    assert_eq!(unsafe { bc_patch_get_values(plane, f.as_mut_ptr(), f.as_mut_ptr(), 3) }, BC_INVALID_ARGUMENT);

    // truncation keeps the NUL and reports the full length
    let mut tiny = [0 as c_char; 4];
    let full = unsafe { bc_last_error_message(tiny.as_mut_ptr(), tiny.len()) };
    assert!(full > 3);
    assert_eq!(tiny[3], 0);

    unsafe {
        bc_patch_free(flip);
        bc_patch_free(plane);
        bc_patch_free(ptr::null_mut());
    }
}

#[test]
fn max_iterations_is_reported() {
    let data = family("shear(0.3)+bump(0.3,1)", 13);
    let mut cfg = bc_solver_config_default(1.0);
    cfg.max_newton_iters = 1;
    cfg.tol_residual = 1e-14;
    let mut out = ptr::null_mut();
    let mut report = BcSolveReport::default();
    let rc = unsafe { bc_solve(data, &cfg, &mut out, &mut report) };
    assert_eq!(rc, BC_MAX_ITERS, "{}", last_error());
    assert!(out.is_null() && !report.converged && report.iterations == 1);
    unsafe { bc_patch_free(data) };
}

fn target_dir() -> PathBuf {
    // tests run from target/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_the_static_library() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let lib = target_dir().join("libbetacrit_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("main.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include "betacrit.h"
int main(void) {
    BcPatch *data = NULL, *init = NULL, *sol = NULL;
    if (bc_patch_from_family("shear(0.3)+bump(0.3,1)", 13, 13, -1, 1, -1, 1, &data) != BC_OK) return 1;
    if (bc_harmonic_extension(data, &init) != BC_OK) return 2;
    BcSolverConfig cfg = bc_solver_config_default(1.0);
    BcSolveReport rep;
    if (bc_solve(init, &cfg, &sol, &rep) != BC_OK || !rep.converged) return 3;
    BcDiagnostics d;
    if (bc_diagnostics(sol, 1.0, 5.0, &d) != BC_OK) return 4;
    char msg[128];
    if (bc_patch_from_family("nope(1)", 9, 9, 0, 1, 0, 1, &data) != BC_INVALID_ARGUMENT) return 5;
    bc_last_error_message(msg, sizeof msg);
    printf("%s %u %.6f %s\n", bc_version(), rep.iterations, d.min_cos_alpha, msg);
    bc_patch_free(init);
    bc_patch_free(sol);
    return 0;
}
"#,
    )
    .unwrap();
    let exe = tmp.path().join("main");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler available");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with(env!("CARGO_PKG_VERSION")), "{text}");
    assert!(text.contains("unknown family"), "{text}");
}
