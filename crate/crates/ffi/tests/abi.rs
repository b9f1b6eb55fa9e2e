use std::ffi::{c_char, CStr, CString};
use std::path::{Path, PathBuf};
use std::ptr;

use num_complex::Complex64;
use tracelab::forms::{self, HarmonicBasis};
use tracelab::lfun;
use tracelab_ffi::*;

fn fixture(name: &str) -> CString {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name);
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 512];
    unsafe {
        tl_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn load(name: &str) -> *mut TlForm {
    let mut f = ptr::null_mut();
    assert_eq!(unsafe { tl_form_load(fixture(name).as_ptr(), &mut f) }, TlStatus::Ok, "{}", last_error());
    f
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(tl_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn kloosterman_and_bessel_values() {
    let mut k = 0.0;
    unsafe {
        assert_eq!(tl_kloosterman(1, 1, 3, &mut k), TlStatus::Ok);
        assert!((k + 1.0).abs() < 1e-12);
        assert_eq!(tl_kloosterman(1, 1, 0, &mut k), TlStatus::Precondition);
        assert!(last_error().contains("modulus"));
        let mut j = 0.0;
        assert_eq!(tl_bessel_j(0, 1.0, &mut j), TlStatus::Ok);
        assert!((j - 0.765_197_686_557_966_6).abs() < 1e-14);
        assert_eq!(tl_bessel_j(0, -1.0, &mut j), TlStatus::Precondition);
    }
}

#[test]
fn gamma_ratio_at_center_is_one() {
    let mut g = TlComplex { re: 0.0, im: 0.0 };
    assert_eq!(unsafe { tl_gamma_ratio(12, TlComplex { re: 0.5, im: 0.0 }, &mut g) }, TlStatus::Ok);
    assert!((g.re - 1.0).abs() < 1e-12 && g.im.abs() < 1e-12);
}

#[test]
fn character_handle_roundtrip() {
    unsafe {
        let mut chi = ptr::null_mut();
        assert_eq!(tl_character_new(4, 1, &mut chi), TlStatus::Ok);
        let (mut parity, mut cond, mut prim) = (0, 0, 0);
        assert_eq!(tl_character_info(chi, &mut parity, &mut cond, &mut prim), TlStatus::Ok);
        assert_eq!((parity, cond, prim), (-1, 4, 1));
        // Twisted sum outside the vanishing range: S_chi(2, 1; 4) = -2i.
        let mut s = TlComplex { re: 0.0, im: 0.0 };
        assert_eq!(tl_twisted_kloosterman(chi, 2, 1, 4, &mut s), TlStatus::Ok);
        assert!(s.re.abs() < 1e-12 && (s.im + 2.0).abs() < 1e-12);
        let mut g = TlComplex { re: 0.0, im: 0.0 };
        assert_eq!(tl_gauss_sum(chi, &mut g), TlStatus::Ok);
        assert!(((g.re * g.re + g.im * g.im).sqrt() - 1.0).abs() < 1e-12);
        // The modulus must be a multiple of 4.
        assert_eq!(tl_twisted_kloosterman(chi, 1, 1, 6, &mut s), TlStatus::Precondition);
        tl_character_free(chi);
        tl_character_free(ptr::null_mut());
    }
}

#[test]
fn null_pointers_are_reported() {
    unsafe {
        assert_eq!(tl_kloosterman(1, 1, 3, ptr::null_mut()), TlStatus::NullPointer);
        let mut s = TlComplex { re: 0.0, im: 0.0 };
        assert_eq!(tl_twisted_kloosterman(ptr::null(), 1, 1, 3, &mut s), TlStatus::NullPointer);
        let mut f = ptr::null_mut();
        assert_eq!(tl_form_load(ptr::null(), &mut f), TlStatus::NullPointer);
        assert!(f.is_null());
    }
}

#[test]
fn missing_fixture_is_an_io_error() {
    let mut f = ptr::null_mut();
    let status = unsafe { tl_form_load(fixture("no-such-form.json").as_ptr(), &mut f) };
    assert_eq!(status, TlStatus::Io);
    assert!(f.is_null());
    assert!(last_error().contains("no-such-form"));
}

#[test]
fn error_message_truncates_and_reports_length() {
    unsafe {
        let mut k = 0.0;
        tl_kloosterman(1, 1, 0, &mut k);
        let full = tl_last_error_message(ptr::null_mut(), 0);
        let mut small = [0 as c_char; 8];
        assert_eq!(tl_last_error_message(small.as_mut_ptr(), small.len()), full);
        assert_eq!(CStr::from_ptr(small.as_ptr()).to_bytes().len(), 7);
    }
}

#[test]
fn form_queries_and_root_number() {
    unsafe {
        let f = load("delta.json");
        let (mut k, mut d, mut n) = (0, 0, 0);
        assert_eq!(tl_form_info(f, &mut k, &mut d, &mut n), TlStatus::Ok);
        assert_eq!((k, d), (12, 1));
        assert!(n >= 1000);
        // tau(2) = -24, normalized by 2^{11/2}.
        let mut a = TlComplex { re: 0.0, im: 0.0 };
        assert_eq!(tl_form_coefficient(f, 2, &mut a), TlStatus::Ok);
        assert!((a.re + 24.0 / 2f64.powf(5.5)).abs() < 1e-13);
        assert_eq!(tl_form_coefficient(f, n + 1, &mut a), TlStatus::InsufficientCoefficients);
        let mut rho = TlComplex { re: 0.0, im: 0.0 };
        assert_eq!(tl_root_number(f, &mut rho), TlStatus::Ok);
        assert!((rho.re - 1.0).abs() < 1e-15 && rho.im.abs() < 1e-15);
        let mut v = 1;
        assert_eq!(tl_form_validate(f, &mut v), TlStatus::Ok);
        assert_eq!(v, 0);
        tl_form_free(f);
    }
}

#[test]
fn petersson_through_the_abi() {
    unsafe {
        let f = load("delta.json");
        let mut b = ptr::null_mut();
        assert_eq!(tl_basis_new([f as *const TlForm].as_ptr(), 1, &mut b), TlStatus::Ok, "{}", last_error());
        let mut w = 0.0;
        assert_eq!(tl_basis_harmonic_weight(b, 0, &mut w), TlStatus::Ok);
        assert!(w > 0.0);
        assert_eq!(tl_basis_harmonic_weight(b, 1, &mut w), TlStatus::Precondition);
        let mut c = std::mem::zeroed::<TlCheck>();
        assert_eq!(tl_petersson(b, 2, 3, 0, &mut c), TlStatus::Ok);
        assert_eq!(c.passed, 1);
        assert!(c.residual <= 1e-9, "residual {}", c.residual);
        tl_basis_free(b);
        tl_form_free(f);
    }
}

#[test]
fn empty_basis_is_rejected() {
    let mut b = ptr::null_mut();
    assert_eq!(unsafe { tl_basis_new(ptr::null(), 0, &mut b) }, TlStatus::Precondition);
}

#[test]
fn continued_average_matches_dirichlet_series() {
    // At s = 2 the Dirichlet series converges absolutely and is an independent route.
    let form = forms::load_fixture(Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/delta.json")).unwrap();
    let basis = HarmonicBasis::one_dimensional(form).unwrap();
    let s = Complex64::new(2.0, 0.0);
    let n = basis.forms[0].num_coeffs();
    let oracle = lfun::spectral_average(&basis, 1, s, n).unwrap();
    unsafe {
        let mut chi = ptr::null_mut();
        assert_eq!(tl_character_new(1, 0, &mut chi), TlStatus::Ok);
        let mut v = std::mem::zeroed::<TlValue>();
        assert_eq!(tl_a_ell_continued(12, chi, 1, TlComplex { re: 2.0, im: 0.0 }, 1e-7, &mut v), TlStatus::Ok);
        let got = Complex64::new(v.value.re, v.value.im);
        assert!((got - oracle).norm() < 1e-6, "{got} vs {oracle}");
        assert_eq!(v.converged, 1);
        tl_character_free(chi);
    }
}

#[test]
fn functional_equation_at_level_one() {
    let mut c = unsafe { std::mem::zeroed::<TlCheck>() };
    let s = TlComplex { re: 0.5, im: 0.3 };
    assert_eq!(unsafe { tl_fe_residual(ptr::null(), 12, s, 1e-6, &mut c) }, TlStatus::Ok, "{}", last_error());
    assert_eq!(c.passed, 1, "residual {}", c.residual);
    // Outside the critical strip the check is refused.
    let s = TlComplex { re: 1.5, im: 0.0 };
    assert_eq!(unsafe { tl_fe_residual(ptr::null(), 12, s, 1e-6, &mut c) }, TlStatus::Precondition);
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/tracelab.h")
}

#[test]
fn header_declares_every_export() {
    let h = std::fs::read_to_string(header()).unwrap();
    for name in [
        "tl_last_error_message",
        "tl_version",
        "tl_character_new",
        "tl_character_free",
        "tl_character_info",
        "tl_gauss_sum",
        "tl_kloosterman",
        "tl_twisted_kloosterman",
        "tl_bessel_j",
        "tl_gamma_ratio",
        "tl_form_load",
        "tl_form_free",
        "tl_form_info",
        "tl_form_coefficient",
        "tl_root_number",
        "tl_form_validate",
        "tl_basis_new",
        "tl_basis_free",
        "tl_basis_harmonic_weight",
        "tl_petersson",
        "tl_a_ell_continued",
        "tl_fe_residual",
        "TL_STATUS_PANIC = 14",
    ] {
        assert!(h.contains(name), "{name} missing from header");
    }
}

#[test]
fn header_compiles_as_c() {
    let Some(cc) = ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| std::process::Command::new(c).arg("--version").output().is_ok())
    else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let out = std::process::Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-x", "c"])
        .arg(header())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
