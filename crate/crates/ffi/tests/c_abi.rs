use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use losdof_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 512];
    unsafe {
        losdof_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

#[test]
fn scenario_round_trip() {
    unsafe {
        let mut sc = ptr::null_mut();
        assert_eq!(losdof_scenario_new(500, 10_000.0, 300.0, 0.1, &mut sc), LosdofStatus::Ok);
        let (mut m, mut p) = (0.0, 0.0);
        assert_eq!(losdof_scenario_derived(sc, &mut m, &mut p), LosdofStatus::Ok);
        assert!((m - 1000.0 / 3.0).abs() < 1e-9);
        assert!((p - 320.0).abs() < 1e-9);
        let mut regime = false;
        assert_eq!(losdof_scenario_in_regime(sc, &mut regime), LosdofStatus::Ok);
        assert!(regime);
        losdof_scenario_free(sc);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    unsafe {
        let mut sc = ptr::null_mut();
        assert_eq!(losdof_scenario_new(10, -1.0, 1.0, 1.0, &mut sc), LosdofStatus::InvalidParameter);
        assert!(sc.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(losdof_scenario_new(10, 1.0, 1.0, 1.0, ptr::null_mut()), LosdofStatus::NullPointer);
        let mut len = 0;
        assert_eq!(losdof_spectrum_len(ptr::null(), &mut len), LosdofStatus::NullPointer);
        assert_eq!(last_error(), "null handle");
        let mut t = ptr::null_mut();
        assert_eq!(losdof_fredholm_table_new(-2.0, 0, 4, &mut t), LosdofStatus::InvalidParameter);
        losdof_scenario_free(ptr::null_mut());
    }
}

#[test]
fn spectrum_queries() {
    unsafe {
        let mut sc = ptr::null_mut();
        assert_eq!(losdof_scenario_new(30, 9.0, 9.0, 0.1, &mut sc), LosdofStatus::Ok);
        let mut s = ptr::null_mut();
        assert_eq!(losdof_spectrum_sample(sc, 3, LosdofMatrix::Kernel, &mut s), LosdofStatus::Ok);
        let mut len = 0;
        assert_eq!(losdof_spectrum_len(s, &mut len), LosdofStatus::Ok);
        assert_eq!(len, 30);
        let mut small = vec![0.0; 5];
        assert_eq!(losdof_spectrum_eigenvalues(s, small.as_mut_ptr(), 5), LosdofStatus::BufferTooSmall);
        let mut eig = vec![0.0; len];
        assert_eq!(losdof_spectrum_eigenvalues(s, eig.as_mut_ptr(), len), LosdofStatus::Ok);
        assert!(eig.windows(2).all(|w| w[0] >= w[1]));
        // trace(GG*) = n²
        assert!((eig.iter().sum::<f64>() - 900.0).abs() < 1e-8);
        let mut logdet = 0.0;
        assert_eq!(losdof_spectrum_log_det(s, &mut logdet), LosdofStatus::Ok);
        let expected: f64 = eig.iter().map(|v| v.max(0.0).ln_1p()).sum();
        assert!((logdet - expected).abs() < 1e-10);
        let mut dof = 0;
        assert_eq!(losdof_spectrum_effective_dof(s, 1.0, &mut dof), LosdofStatus::Ok);
        assert_eq!(dof, eig.iter().filter(|&&v| v >= 1.0).count());
        losdof_spectrum_free(s);
        losdof_scenario_free(sc);
    }
}

#[test]
fn fredholm_queries() {
    unsafe {
        let mut t = ptr::null_mut();
        assert_eq!(losdof_fredholm_table_new(5.0, 0, 20, &mut t), LosdofStatus::Ok);
        let mut a1 = 0.0;
        assert_eq!(losdof_fredholm_trace(t, 1, &mut a1), LosdofStatus::Ok);
        assert!((a1 - 5.0).abs() < 1e-6);
        assert_eq!(losdof_fredholm_trace(t, 0, &mut a1), LosdofStatus::IndexOutOfRange);
        let mut d0 = 0.0;
        assert_eq!(losdof_fredholm_dk(t, 0, &mut d0), LosdofStatus::Ok);
        assert_eq!(d0, 1.0);
        let mut e1 = 0.0;
        assert_eq!(losdof_fredholm_expected_subdeterminant(t, 1, &mut e1), LosdofStatus::Ok);
        assert!((e1 - 1.0).abs() < 1e-6);
        let mut n = 0;
        assert_eq!(losdof_fredholm_mu_len(t, &mut n), LosdofStatus::Ok);
        let mut mu = vec![0.0; n];
        assert_eq!(losdof_fredholm_mu(t, mu.as_mut_ptr(), n), LosdofStatus::Ok);
        assert!(mu[0] <= 1.0 + 1e-6);
        let (mut c, mut delta) = (0.0, 0.0);
        assert_eq!(losdof_fredholm_decay(t, &mut c, &mut delta), LosdofStatus::Ok);
        assert!(delta > 0.0);
        let (mut mean, mut se, mut z) = (0.0, 0.0, 0.0);
        assert_eq!(losdof_identity_check(t, 2, 20_000, 1, &mut mean, &mut se, &mut z), LosdofStatus::Ok);
        assert!(z.abs() < 5.0, "z = {z}");
        losdof_fredholm_table_free(t);
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(losdof_version()) }.to_str().unwrap();
    assert_eq!(v, concat!("losdof ", env!("CARGO_PKG_VERSION")));
}

/// Directory holding the built static library (`target/<profile>`).
fn artifact_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(|deps| deps.parent()).unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_header() {
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let lib = artifact_dir().join("liblosdof_ffi.a");
    if !lib.exists() {
        panic!("static library not found at {}", lib.display());
    }
    let out_dir = tempfile::tempdir().unwrap();
    let exe = out_dir.path().join("smoke");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(&cc)
        .arg("-std=c11")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(crate_dir.join("tests/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&exe)
        .status()
        .expect("C compiler available");
    assert!(status.success(), "compiling the C smoke test failed");
    let output = Command::new(&exe).output().unwrap();
    assert!(output.status.success(), "smoke test exited with {:?}: {}", output.status, String::from_utf8_lossy(&output.stderr));
    assert!(String::from_utf8_lossy(&output.stdout).ends_with("ok\n"));
}
