use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use cavity_kernels_ffi::*;

fn last_error() -> String {
    let p = ck_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

fn free_space() -> *mut CkProvider {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { ck_provider_free_space(&mut p) }, CkStatus::Ok);
    p
}

fn dipolar(r: [f64; 3], rp: [f64; 3]) -> [[f64; 3]; 3] {
    let d: Vec<f64> = (0..3).map(|i| rp[i] - r[i]).collect();
    let len = d.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let delta = if i == j { 1.0 } else { 0.0 };
            out[i][j] = (3.0 * d[i] * d[j] / (len * len) - delta) / (8.0 * std::f64::consts::PI * len.powi(3));
        }
    }
    out
}

#[test]
fn kernel_matches_dipolar_form() {
    let p = free_space();
    let (r, rp) = ([0.0, 0.1, 0.2], [0.4, -0.3, 1.1]);
    let want = dipolar(r, rp);
    for (kind, backend, tol) in [
        (CkKernelKind::Ee, CkBackend::ClosedForm, 1e-14),
        (CkKernelKind::Ee, CkBackend::Generic, 1e-7),
        (CkKernelKind::Mm, CkBackend::Auto, 1e-14),
        (CkKernelKind::Mm, CkBackend::Generic, 1e-5),
    ] {
        let mut reg = [CkComplex::default(); 9];
        let mut delta = [CkComplex::default(); 9];
        let s = unsafe { ck_kernel(p, kind, backend, r.as_ptr(), rp.as_ptr(), reg.as_mut_ptr(), delta.as_mut_ptr()) };
        assert_eq!(s, CkStatus::Ok);
        assert!(ck_last_error_message().is_null());
        let scale = want.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
        for i in 0..3 {
            for j in 0..3 {
                assert!((reg[3 * i + j].re - want[i][j]).abs() < tol * scale, "{kind:?} {backend:?}");
                assert_eq!(reg[3 * i + j].im, 0.0);
            }
        }
    }
    unsafe { ck_provider_free(p) };
}

#[test]
fn cross_kernels_vanish_for_reciprocal_providers() {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { ck_provider_mirror(0.0, &mut p) }, CkStatus::Ok);
    let name = unsafe { CStr::from_ptr(ck_provider_name(p)) };
    assert_eq!(name.to_str().unwrap(), "mirror_halfspace");
    let mut reg = [CkComplex::default(); 9];
    let (r, rp) = ([0.0, 0.0, 1.0], [0.3, 0.2, 1.6]);
    let s = unsafe { ck_kernel(p, CkKernelKind::Em, CkBackend::Auto, r.as_ptr(), rp.as_ptr(), reg.as_mut_ptr(), ptr::null_mut()) };
    assert_eq!(s, CkStatus::Ok);
    assert!(reg.iter().all(|z| z.re.abs() < 1e-12 && z.im.abs() < 1e-12));
    unsafe { ck_provider_free(p) };
}

#[test]
fn w2g_is_reciprocal_and_rejects_coincident_points() {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { ck_provider_planar_cavity(2.0, CkPolarization::X, 40, 0.01, &mut p) }, CkStatus::Ok);
    let (r, rp) = ([0.1, 0.2, 0.5], [0.3, -0.1, 1.4]);
    let w = CkComplex { re: 1.3, im: 0.2 };
    let (mut a, mut b) = ([CkComplex::default(); 9], [CkComplex::default(); 9]);
    unsafe {
        assert_eq!(ck_w2g(p, r.as_ptr(), rp.as_ptr(), w, a.as_mut_ptr()), CkStatus::Ok);
        assert_eq!(ck_w2g(p, rp.as_ptr(), r.as_ptr(), w, b.as_mut_ptr()), CkStatus::Ok);
    }
    for i in 0..3 {
        for j in 0..3 {
            assert!((a[3 * i + j].re - b[3 * j + i].re).abs() < 1e-12);
            assert!((a[3 * i + j].im - b[3 * j + i].im).abs() < 1e-12);
        }
    }
    let fs = free_space();
    let s = unsafe { ck_w2g(fs, r.as_ptr(), r.as_ptr(), w, a.as_mut_ptr()) };
    assert_eq!(s, CkStatus::Domain);
    assert!(last_error().starts_with("CoincidentPoints"));
    unsafe {
        ck_provider_free(p);
        ck_provider_free(fs);
    }
}

#[test]
fn invalid_arguments_and_null_pointers() {
    let mut p = ptr::null_mut();
    let s = unsafe { ck_provider_planar_cavity(-1.0, CkPolarization::Y, 10, 0.0, &mut p) };
    assert_eq!(s, CkStatus::InvalidInput);
    assert!(p.is_null());
    assert!(last_error().contains("length"));
    assert_eq!(unsafe { ck_provider_mirror(0.0, ptr::null_mut()) }, CkStatus::NullPointer);
    let mut reg = [CkComplex::default(); 9];
    let r = [0.0; 3];
    let s = unsafe { ck_kernel(ptr::null(), CkKernelKind::Ee, CkBackend::Auto, r.as_ptr(), r.as_ptr(), reg.as_mut_ptr(), ptr::null_mut()) };
    assert_eq!(s, CkStatus::NullPointer);
    assert!(last_error().contains("provider"));
    unsafe { ck_provider_free(ptr::null_mut()) };
    assert!(unsafe { ck_provider_name(ptr::null()) }.is_null());
}

#[test]
fn contour_identity_through_ffi() {
    let p = free_space();
    let (r, rp) = ([0.0, 0.0, 0.0], [0.0, 0.0, 1.0]);
    let mut sum = [CkComplex::default(); 9];
    let mut closure = f64::NAN;
    let s = unsafe {
        ck_residue_decomposition(p, CkIntegrand::WG, r.as_ptr(), rp.as_ptr(), 4, sum.as_mut_ptr(), ptr::null_mut(), &mut closure)
    };
    assert_eq!(s, CkStatus::Ok);
    // iπ · (3nn − I)/(4πR³) along z: zz = i/2, xx = −i/4.
    assert!((sum[8].im - 0.5).abs() < 1e-5 && sum[8].re.abs() < 1e-5);
    assert!((sum[0].im + 0.25).abs() < 1e-5);
    assert!(closure < 1e-6);
    unsafe { ck_provider_free(p) };
}

#[test]
fn energy_units_and_ratio() {
    let p = free_space();
    let pos = [0.0, 0.0, 0.0, 0.0, 0.0, 1.0];
    let d = [0.0, 0.0, 1.0, 0.0, 0.0, 1.0];
    let mut e = 0.0;
    assert_eq!(unsafe { ck_pairwise_energy(p, 2, pos.as_ptr(), d.as_ptr(), ptr::null(), &mut e) }, CkStatus::Ok);
    // Two parallel dipoles along their axis: −2 λ_zz = −2/(4π).
    assert!((e + 0.5 / std::f64::consts::PI).abs() < 1e-12, "{e}");
    let same = [0.0; 6];
    let s = unsafe { ck_pairwise_energy(p, 2, same.as_ptr(), d.as_ptr(), ptr::null(), &mut e) };
    assert_ne!(s, CkStatus::Ok);
    unsafe { ck_provider_free(p) };

    let mut v = 0.0;
    let kind = CString::new("length").unwrap();
    assert_eq!(unsafe { ck_convert_units(2.5, kind.as_ptr(), true, &mut v) }, CkStatus::Ok);
    assert_eq!(v, 2.5);
    let bad = CString::new("furlong").unwrap();
    assert_eq!(unsafe { ck_convert_units(1.0, bad.as_ptr(), true, &mut v) }, CkStatus::InvalidInput);
    assert_eq!(unsafe { ck_diamagnetic_ratio(1e-12, 1e-9, &mut v) }, CkStatus::Ok);
    assert_eq!(v, 1e-3);
    assert_eq!(unsafe { ck_diamagnetic_ratio(-1.0, 1e-9, &mut v) }, CkStatus::InvalidInput);
    let version = unsafe { CStr::from_ptr(ck_version()) };
    assert_eq!(version.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn run_config_returns_cli_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.json");
    std::fs::write(
        &cfg,
        r#"{"command": "kernels", "kernels": {"pairs": [[[0, 0, 0], [0, 0, 1]]], "kinds": ["ee"]}}"#,
    )
    .unwrap();
    let c = CString::new(cfg.to_str().unwrap()).unwrap();
    let out = CString::new(tmp.path().join("out").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { ck_run_config(c.as_ptr(), out.as_ptr(), 1) }, 0);
    assert!(tmp.path().join("out/kernels.csv").exists());
    let missing = CString::new(tmp.path().join("nope.json").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { ck_run_config(missing.as_ptr(), out.as_ptr(), 1) }, 2);
    assert_eq!(unsafe { ck_run_config(ptr::null(), ptr::null(), 0) }, 2);
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/cavity_kernels.h")
}

#[test]
fn header_declares_every_export() {
    let h = std::fs::read_to_string(header()).unwrap();
    let src = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 14);
    for name in exports {
        assert!(h.contains(&format!("{name}(")), "{name} missing from header");
    }
}

const C_SMOKE: &str = r#"
#include <stdio.h>
#include <string.h>
#include "cavity_kernels.h"

int main(void) {
    CkProvider *p = NULL;
    if (ck_provider_free_space(&p) != CK_STATUS_OK) return 10;
    double r[3] = {0, 0, 0}, rp[3] = {0, 0, 2};
    CkComplex k[9];
    if (ck_kernel(p, CK_KERNEL_KIND_EE, CK_BACKEND_AUTO, r, rp, k, NULL) != CK_STATUS_OK) return 11;
    printf("%.17g\n", k[8].re);
    if (ck_kernel(p, CK_KERNEL_KIND_EE, CK_BACKEND_AUTO, r, r, k, NULL) != CK_STATUS_DOMAIN) return 12;
    if (strstr(ck_last_error_message(), "CoincidentPoints") == NULL) return 13;
    ck_provider_free(p);
    return 0;
}
"#;

/// Compiles a C program against the generated header and the static library.
#[test]
fn c_program_links_and_runs() {
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libcavity_kernels_ffi.a");
    assert!(lib.exists(), "static library not found at {}", lib.display());
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("smoke.c");
    std::fs::write(&src, C_SMOKE).unwrap();
    let bin = tmp.path().join("smoke");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&bin)
        .arg(&src)
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .status()
        .expect("C compiler available");
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let zz: f64 = String::from_utf8_lossy(&out.stdout).trim().parse().unwrap();
    // 2/(8π · 8)
    assert!((zz - 1.0 / (32.0 * std::f64::consts::PI)).abs() < 1e-15);
}
