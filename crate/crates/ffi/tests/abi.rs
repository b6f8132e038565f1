use monoplane_ffi::*;
use std::ffi::{c_char, CString};
use std::ptr;

fn last_error() -> String {
    let n = unsafe { mp_last_error_message(ptr::null_mut(), 0) };
    let mut buf = vec![0u8; n];
    unsafe { mp_last_error_message(buf.as_mut_ptr() as *mut c_char, n) };
    String::from_utf8(buf[..n - 1].to_vec()).unwrap()
}

fn field(spec: &str) -> *mut MpField {
    let s = CString::new(spec).unwrap();
    let mut f = ptr::null_mut();
    assert_eq!(unsafe { mp_field_new(s.as_ptr(), &mut f) }, MpStatus::Ok, "{}", last_error());
    f
}

#[test]
fn field_handle_round_trip() {
    let f = field("p_laplacian(p=4)");
    let (mut gx, mut gy) = (0.0, 0.0);
    assert_eq!(unsafe { mp_field_eval(f, 0.3, -0.4, &mut gx, &mut gy) }, MpStatus::Ok);
    // |x|^2 x with |x| = 0.5.
    assert!((gx - 0.075).abs() < 1e-15 && (gy + 0.1).abs() < 1e-15);
    let mut jac = [0.0; 4];
    assert_eq!(unsafe { mp_field_jacobian(f, 1.0, 0.0, jac.as_mut_ptr()) }, MpStatus::Ok);
    assert!((jac[0] - 3.0).abs() < 1e-12 && (jac[3] - 1.0).abs() < 1e-12);
    let mut gap = 0.0;
    assert_eq!(unsafe { mp_field_gap(f, 1.0, 0.0, 0.0, 0.0, &mut gap) }, MpStatus::Ok);
    assert!((gap - 1.0).abs() < 1e-15);
    let (mut x, mut y) = (0.0, 0.0);
    assert_eq!(unsafe { mp_field_invert(f, 0.075, -0.1, 1e-13, &mut x, &mut y) }, MpStatus::Ok);
    assert!((x - 0.3).abs() < 1e-10 && (y + 0.4).abs() < 1e-10);
    let mut needed = 0;
    let mut buf = [0 as c_char; 64];
    assert_eq!(unsafe { mp_field_label(f, buf.as_mut_ptr(), buf.len(), &mut needed) }, MpStatus::Ok);
    assert_eq!(needed, "p_laplacian(p=4)".len() + 1);
    unsafe { mp_field_free(f) };
}

#[test]
fn dual_of_identity_is_identity() {
    let f = field("identity");
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { mp_field_dual(f, &mut d) }, MpStatus::Ok);
    let (mut gx, mut gy) = (0.0, 0.0);
    assert_eq!(unsafe { mp_field_eval(d, 0.7, 0.2, &mut gx, &mut gy) }, MpStatus::Ok);
    assert!((gx - 0.7).abs() < 1e-10 && (gy - 0.2).abs() < 1e-10);
    unsafe {
        mp_field_free(d);
        mp_field_free(f);
    }
}

#[test]
fn errors_map_to_codes_and_messages() {
    let s = CString::new("p_laplacian(p=0.5)").unwrap();
    let mut f = ptr::null_mut();
    let st = unsafe { mp_field_new(s.as_ptr(), &mut f) };
    assert_ne!(st, MpStatus::Ok);
    assert!(f.is_null());
    assert!(last_error().contains("p"), "{}", last_error());
    assert_eq!(unsafe { mp_field_eval(ptr::null(), 0.0, 0.0, ptr::null_mut(), ptr::null_mut()) }, MpStatus::NullPointer);
    assert_eq!(last_error(), "field is null");
    let g = field("identity");
    let mut gy = 0.0;
    assert_eq!(unsafe { mp_field_eval(g, 0.0, 0.0, ptr::null_mut(), &mut gy) }, MpStatus::NullPointer);
    // Success clears the message.
    let mut gx = 0.0;
    assert_eq!(unsafe { mp_field_eval(g, 0.0, 0.0, &mut gx, &mut gy) }, MpStatus::Ok);
    assert_eq!(last_error(), "");
    unsafe { mp_field_free(g) };
    unsafe { mp_field_free(ptr::null_mut()) };
}

#[test]
fn minty_round_trip_through_handles() {
    let f = field("identity");
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { mp_minty_forward(f, &mut h) }, MpStatus::Ok);
    let (mut hx, mut hy) = (1.0, 1.0);
    assert_eq!(unsafe { mp_beltrami_eval(h, 0.4, 0.1, &mut hx, &mut hy) }, MpStatus::Ok);
    // Identity field gives H = 0.
    assert!(hx.abs() < 1e-12 && hy.abs() < 1e-12);
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { mp_minty_backward(h, &mut g) }, MpStatus::Ok);
    let (mut gx, mut gy) = (0.0, 0.0);
    assert_eq!(unsafe { mp_field_eval(g, 0.4, 0.1, &mut gx, &mut gy) }, MpStatus::Ok);
    assert!((gx - 0.4).abs() < 1e-10 && (gy - 0.1).abs() < 1e-10);
    unsafe {
        mp_field_free(g);
        mp_beltrami_free(h);
        mp_field_free(f);
    }
}

#[test]
fn beltrami_quotient_of_zero_map() {
    let s = CString::new("zero").unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { mp_beltrami_new(s.as_ptr(), &mut h) }, MpStatus::Ok);
    let (mut lr, mut li, mut gp, mut gm) = (1.0, 1.0, 0.0, 0.0);
    assert_eq!(unsafe { mp_beltrami_quotient(h, 0.0, 0.0, 0.1, 0.0, &mut lr, &mut li, &mut gp, &mut gm) }, MpStatus::Ok);
    assert_eq!((lr, li, gp, gm), (0.0, 0.0, 1.0, 1.0));
    assert_eq!(unsafe { mp_beltrami_quotient(h, 0.0, 0.0, 0.0, 0.0, &mut lr, &mut li, &mut gp, &mut gm) }, MpStatus::InvalidParameter);
    unsafe { mp_beltrami_free(h) };
}

#[test]
fn counterexample_entry_points() {
    let (mut pass, mut rows) = (false, 0usize);
    assert_eq!(unsafe { mp_counterexample_audit(&mut pass, &mut rows) }, MpStatus::Ok);
    assert!(pass && rows > 0);
    let mut u = 0.0;
    // u = -(r/3) sin 2θ at r = 1, θ = π/4.
    let c = std::f64::consts::FRAC_1_SQRT_2;
    assert_eq!(unsafe { mp_counterexample_u(c, c, &mut u) }, MpStatus::Ok);
    assert!((u + 1.0 / 3.0).abs() < 1e-12, "{u}");
}

#[test]
fn solve_harmonic_boundary_data() {
    let f = field("identity");
    let cos = [1.0];
    let mut sol = ptr::null_mut();
    let st = unsafe { mp_solve(f, 0.125, 0.5, cos.as_ptr(), 1, ptr::null(), 0, 1e-12, &mut sol) };
    assert_eq!(st, MpStatus::Ok, "{}", last_error());
    let mut n = 0;
    assert_eq!(unsafe { mp_solution_node_count(sol, &mut n) }, MpStatus::Ok);
    let mut xy = vec![0.0; 2 * n];
    let mut vals = vec![0.0; n];
    assert_eq!(unsafe { mp_solution_nodes(sol, xy.as_mut_ptr(), vals.as_mut_ptr(), n) }, MpStatus::Ok);
    // The P1 solution of harmonic affine data is exact.
    for k in 0..n {
        assert!((vals[k] - (0.5 + xy[2 * k])).abs() < 1e-10);
    }
    assert_eq!(unsafe { mp_solution_nodes(sol, xy.as_mut_ptr(), vals.as_mut_ptr(), n - 1) }, MpStatus::InvalidParameter);
    let (mut res, mut it, mut lip) = (0.0, 0, 0.0);
    assert_eq!(unsafe { mp_solution_report(sol, &mut res, &mut it, &mut lip) }, MpStatus::Ok);
    assert!(res < 1e-12 && (lip - 1.0).abs() < 1e-10);
    unsafe {
        mp_solution_free(sol);
        mp_field_free(f);
    }
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/monoplane.h")).unwrap();
    for name in [
        "mp_last_error_message",
        "mp_field_new",
        "mp_field_free",
        "mp_field_eval",
        "mp_field_dual",
        "mp_minty_forward",
        "mp_minty_backward",
        "mp_beltrami_quotient",
        "mp_counterexample_audit",
        "mp_solve",
        "mp_solution_report",
        "MP_STATUS_PANIC",
        "typedef struct MpField MpField",
    ] {
        assert!(header.contains(name), "{name}");
    }
}

/// Compiles a C program against the header and the static library, when a C compiler exists.
#[test]
fn c_program_links_and_runs() {
    let Some(cc) = ["cc", "gcc", "clang"].into_iter().find(|c| std::process::Command::new(c).arg("--version").output().is_ok()) else {
        eprintln!("no C compiler; skipped");
        return;
    };
    let manifest = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
    // The integration test binary lives in target/<profile>/deps.
    let deps = std::env::current_exe().unwrap().parent().unwrap().to_path_buf();
    let lib = [deps.join("libmonoplane_ffi.a"), deps.parent().unwrap().join("libmonoplane_ffi.a")].into_iter().find(|p| p.exists());
    let Some(lib) = lib else {
        eprintln!("static library not found next to {}; skipped", deps.display());
        return;
    };
    let tmp = tempfile::tempdir().unwrap();
    let exe = tmp.path().join("smoke");
    let out = std::process::Command::new(cc)
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = std::process::Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "ok");
}
