//! C ABI for the tracelab kernels.
//!
//! Conventions:
//! - Every fallible function returns a [`TlStatus`]; results go through out
//!   pointers, which are written only on success.
//! - Characters, forms and bases are opaque handles created by `*_new` or
//!   `*_load` functions and released with the matching `*_free`.
//! - The message of the last failure on the calling thread is available from
//!   [`tl_last_error_message`].
//! - Panics never cross the boundary; they are reported as `TL_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use num_complex::Complex64;
use tracelab::arith::{self, DirichletCharacter};
use tracelab::forms::{self, CuspFormData, HarmonicBasis};
use tracelab::voronoi::VoronoiTruncation;
use tracelab::{lfun, specfun, traceformula, Error};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Precondition = 3,
    NotInvertible = 4,
    Parity = 5,
    Fixture = 6,
    InsufficientCoefficients = 7,
    Truncation = 8,
    IllConditioned = 9,
    NonFinite = 10,
    Unsupported = 11,
    IdentityViolated = 12,
    Io = 13,
    Panic = 14,
}

/// A complex number with the layout of `double[2]`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TlComplex {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for TlComplex {
    fn from(z: Complex64) -> Self {
        TlComplex { re: z.re, im: z.im }
    }
}

impl From<TlComplex> for Complex64 {
    fn from(z: TlComplex) -> Self {
        Complex64::new(z.re, z.im)
    }
}

/// Opaque Dirichlet character.
pub struct TlCharacter(DirichletCharacter);

/// Opaque cusp form with its coefficients.
pub struct TlForm(CuspFormData);

/// Opaque family of forms carrying harmonic weights.
pub struct TlBasis(HarmonicBasis);

/// Outcome of a comparison between two sides of an identity.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TlCheck {
    pub lhs: TlComplex,
    pub rhs: TlComplex,
    pub residual: f64,
    /// Error budget the residual is judged against.
    pub budget: f64,
    /// 1 when the residual is within budget and all refinements converged.
    pub passed: i32,
}

/// A truncated evaluation with its error estimate.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TlValue {
    pub value: TlComplex,
    pub error_estimate: f64,
    /// 1 when no truncation cap was hit.
    pub converged: i32,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> TlStatus {
    match err {
        Error::Precondition(_) => TlStatus::Precondition,
        Error::NotInvertible { .. } => TlStatus::NotInvertible,
        Error::Parity { .. } => TlStatus::Parity,
        Error::Fixture { .. } => TlStatus::Fixture,
        Error::InsufficientCoefficients { .. } => TlStatus::InsufficientCoefficients,
        Error::Truncation(_) => TlStatus::Truncation,
        Error::IllConditioned(_) => TlStatus::IllConditioned,
        Error::NonFinite(_) => TlStatus::NonFinite,
        Error::Unsupported(_) => TlStatus::Unsupported,
        Error::IdentityViolated(_) => TlStatus::IdentityViolated,
        Error::Io { .. } => TlStatus::Io,
    }
}

/// Internal failure type: a status plus its message.
struct Fail(TlStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(TlStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> TlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TlStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            TlStatus::Panic
        }
    }
}

/// Writes `v` through `out`.
///
/// # Safety
/// `out` must be null or valid for writes.
unsafe fn put<T>(out: *mut T, v: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

/// # Safety
/// `p` must be null or point to a live handle.
unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

fn truncation(target: f64) -> Result<VoronoiTruncation, Fail> {
    let t = VoronoiTruncation::default().with_target(target);
    t.validate()?;
    Ok(t)
}

// ---------------------------------------------------------------------------
// Errors and version

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len - 1` bytes) and returns the full message length.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes of writes.
#[no_mangle]
pub unsafe extern "C" fn tl_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

// ---------------------------------------------------------------------------
// Characters

/// The character mod `modulus` at position `index` of the CRT-lexicographic
/// enumeration (0 is the trivial character).
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tl_character_new(modulus: u64, index: usize, out: *mut *mut TlCharacter) -> TlStatus {
    guard(|| {
        let chi = arith::character(modulus, index)?;
        put(out, Box::into_raw(Box::new(TlCharacter(chi))), "out")
    })
}

/// Releases a character; null is ignored.
///
/// # Safety
/// `chi` must be null or a handle from [`tl_character_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tl_character_free(chi: *mut TlCharacter) {
    if !chi.is_null() {
        drop(Box::from_raw(chi));
    }
}

/// `chi(-1)`, the conductor and primitivity of a character.
///
/// # Safety
/// `chi` must be a live handle; out pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tl_character_info(
    chi: *const TlCharacter,
    parity: *mut i32,
    conductor: *mut u64,
    is_primitive: *mut i32,
) -> TlStatus {
    guard(|| {
        let c = &get(chi, "chi")?.0;
        put(parity, c.parity(), "parity")?;
        put(conductor, c.conductor(), "conductor")?;
        put(is_primitive, c.is_primitive() as i32, "is_primitive")
    })
}

/// Normalized Gauss sum `D^{-1/2} sum chi(a) e(a/D)`.
///
/// # Safety
/// `chi` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tl_gauss_sum(chi: *const TlCharacter, out: *mut TlComplex) -> TlStatus {
    guard(|| put(out, arith::gauss_sum(&get(chi, "chi")?.0).into(), "out"))
}

// ---------------------------------------------------------------------------
// Exponential sums and special functions

/// Plain Kloosterman sum `S(m, n; c)`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tl_kloosterman(m: i64, n: i64, c: u64, out: *mut f64) -> TlStatus {
    guard(|| {
        if c == 0 {
            return Err(Fail(TlStatus::Precondition, "modulus must be positive".into()));
        }
        put(out, arith::kloosterman(m, n, c), "out")
    })
}

/// Twisted Kloosterman sum `S_chi(m, n; c) = sum conj(chi(x)) e((m xbar + n x)/c)`.
///
/// # Safety
/// `chi` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tl_twisted_kloosterman(
    chi: *const TlCharacter,
    m: i64,
    n: i64,
    c: u64,
    out: *mut TlComplex,
) -> TlStatus {
    guard(|| put(out, arith::twisted_kloosterman(&get(chi, "chi")?.0, m, n, c)?.into(), "out"))
}

/// `J_nu(x)` for `x >= 0`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tl_bessel_j(nu: u32, x: f64, out: *mut f64) -> TlStatus {
    guard(|| put(out, specfun::bessel_j(nu, x)?, "out"))
}

/// `gamma_k(1 - s) / gamma_k(s)`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tl_gamma_ratio(k: u32, s: TlComplex, out: *mut TlComplex) -> TlStatus {
    guard(|| put(out, specfun::gamma_ratio(k, s.into())?.into(), "out"))
}

// ---------------------------------------------------------------------------
// Forms and bases

/// Loads a fixture file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tl_form_load(path: *const c_char, out: *mut *mut TlForm) -> TlStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        let p = CStr::from_ptr(path)
            .to_str()
            .map_err(|e| Fail(TlStatus::InvalidUtf8, format!("path is not UTF-8: {e}")))?;
        let form = forms::load_fixture(p)?;
        put(out, Box::into_raw(Box::new(TlForm(form))), "out")
    })
}

/// Releases a form; null is ignored.
///
/// # Safety
/// `form` must be null or a handle from [`tl_form_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tl_form_free(form: *mut TlForm) {
    if !form.is_null() {
        drop(Box::from_raw(form));
    }
}

/// Weight, level and number of stored coefficients of a form.
///
/// # Safety
/// `form` must be a live handle; out pointers valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tl_form_info(
    form: *const TlForm,
    weight: *mut u32,
    level: *mut u64,
    num_coeffs: *mut u64,
) -> TlStatus {
    guard(|| {
        let f = &get(form, "form")?.0;
        put(weight, f.weight, "weight")?;
        put(level, f.level, "level")?;
        put(num_coeffs, f.num_coeffs(), "num_coeffs")
    })
}

/// Normalized coefficient `a(n) = lambda(n) / n^{(k-1)/2}`.
///
/// # Safety
/// `form` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tl_form_coefficient(form: *const TlForm, n: u64, out: *mut TlComplex) -> TlStatus {
    guard(|| put(out, get(form, "form")?.0.a(n)?.into(), "out"))
}

/// Root number of the functional equation of a form.
///
/// # Safety
/// `form` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tl_root_number(form: *const TlForm, out: *mut TlComplex) -> TlStatus {
    guard(|| put(out, lfun::root_number(&get(form, "form")?.0)?.value.into(), "out"))
}

/// Number of Hecke-structure violations found in the form's coefficients.
///
/// # Safety
/// `form` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tl_form_validate(form: *const TlForm, violations: *mut u64) -> TlStatus {
    guard(|| {
        let rep = forms::validate_assumption(&get(form, "form")?.0);
        let n = rep.adjoint_violations.len() + rep.multiplicative_violations.len();
        put(violations, n as u64, "violations")
    })
}

/// Builds a basis from `count` forms (copied). A single form without a
/// stored harmonic weight gets one from the trace formula; larger bases
/// need stored weights.
///
/// # Safety
/// `forms` must point to `count` live form handles; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tl_basis_new(
    forms: *const *const TlForm,
    count: usize,
    out: *mut *mut TlBasis,
) -> TlStatus {
    guard(|| {
        if forms.is_null() || count == 0 {
            return Err(Fail(TlStatus::Precondition, "a basis needs at least one form".into()));
        }
        let list = std::slice::from_raw_parts(forms, count)
            .iter()
            .map(|&f| get(f, "form").map(|f| f.0.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        let basis = if count == 1 {
            HarmonicBasis::one_dimensional(list.into_iter().next().expect("count is 1"))?
        } else {
            HarmonicBasis::new(list)?
        };
        put(out, Box::into_raw(Box::new(TlBasis(basis))), "out")
    })
}

/// Releases a basis; null is ignored.
///
/// # Safety
/// `basis` must be null or a handle from [`tl_basis_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tl_basis_free(basis: *mut TlBasis) {
    if !basis.is_null() {
        drop(Box::from_raw(basis));
    }
}

/// Harmonic weight of form `i` of the basis.
///
/// # Safety
/// `basis` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tl_basis_harmonic_weight(basis: *const TlBasis, i: usize, out: *mut f64) -> TlStatus {
    guard(|| {
        let b = &get(basis, "basis")?.0;
        let f = b
            .forms
            .get(i)
            .ok_or_else(|| Fail(TlStatus::Precondition, format!("form index {i} out of range")))?;
        put(out, f.omega()?, "out")
    })
}

// ---------------------------------------------------------------------------
// Identities

/// Petersson formula at `(m, n)`: `lhs` is the spectral side, `rhs` the
/// geometric side summed to `cmax` (0 picks the cutoff whose explicit tail
/// bound is below `1e-11`).
///
/// # Safety
/// `basis` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tl_petersson(
    basis: *const TlBasis,
    m: u64,
    n: u64,
    cmax: u64,
    out: *mut TlCheck,
) -> TlStatus {
    guard(|| {
        let b = &get(basis, "basis")?.0;
        let f = &b.forms[0];
        let cmax = if cmax == 0 {
            traceformula::cmax_for_tail(f.weight, f.level, &f.character, m, n, 1e-11)
        } else {
            cmax
        };
        let c = traceformula::verify_petersson(b, f.weight, f.level, &f.character, m, n, cmax)?;
        put(
            out,
            TlCheck {
                lhs: c.spectral.into(),
                rhs: c.geometric.value.into(),
                residual: c.residual,
                budget: c.budget,
                passed: c.passed() as i32,
            },
            "out",
        )
    })
}

/// The continued average `A_ell(s) = sum_f omega_f conj(a_f(ell)) L(s, f)`
/// of the space `(k, chi mod D)`, to absolute accuracy about `target`.
///
/// # Safety
/// `chi` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tl_a_ell_continued(
    k: u32,
    chi: *const TlCharacter,
    ell: u64,
    s: TlComplex,
    target: f64,
    out: *mut TlValue,
) -> TlStatus {
    guard(|| {
        let chi = &get(chi, "chi")?.0;
        let r = lfun::a_ell_continued(k, chi.modulus(), chi, ell, s.into(), None, &truncation(target)?)?;
        put(
            out,
            TlValue { value: r.value.into(), error_estimate: r.error_estimate, converged: r.converged as i32 },
            "out",
        )
    })
}

/// Functional equation of `A_1` at `s`, `0 < Re s < 1`: `lhs = A_1(s)`,
/// `rhs` the dual side; `budget` is `target`. With `form` null the space is
/// level one of weight `k`; otherwise the form fixes the space and root number.
///
/// # Safety
/// `form` must be null or a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tl_fe_residual(
    form: *const TlForm,
    k: u32,
    s: TlComplex,
    target: f64,
    out: *mut TlCheck,
) -> TlStatus {
    guard(|| {
        let trunc = truncation(target)?;
        let fe = match form.as_ref() {
            Some(f) => {
                let f = &f.0;
                lfun::fe_residual(f.weight, f.level, &f.character, Some(f), s.into(), None, &trunc)?
            }
            None => lfun::fe_residual(k, 1, &DirichletCharacter::trivial(1), None, s.into(), None, &trunc)?,
        };
        put(
            out,
            TlCheck {
                lhs: fe.lhs.into(),
                rhs: fe.rhs.into(),
                residual: fe.residual,
                budget: target,
                passed: (fe.residual <= target && fe.converged) as i32,
            },
            "out",
        )
    })
}
