//! L-series of cusp forms and their continuation through the trace formula.
//!
//! The averaged series `A_ell(s) = sum_f omega_f conj(a_f(ell)) L(s, f)` is
//! split dyadically, `A_ell(s) = sum_{u >= -1} 2^{-us} I_s(2^u)`, and each
//! smooth sum `I_s(X)` is evaluated on the geometric side of the Petersson
//! formula after Poisson summation. Every term is entire in `s`, and the
//! dyadic series converges for `Re s > -(k-4)/2`, which gives values inside
//! the critical strip without using any Fourier coefficients.

use std::f64::consts::TAU;

use crate::arith::{self, DirichletCharacter};
use crate::error::{precondition, Error, Result};
use crate::forms::{CuspFormData, HarmonicBasis};
use crate::specfun::gamma_ratio;
use crate::transforms::{canonical_bump, spectral_cutoff, BumpFunction, TestFunction};
use crate::voronoi::{final_variant, DualFrequencySum, FinalVariant, VoronoiReport, VoronoiTruncation};
use crate::{i_pow, C64};

/// Smallest real part accepted by [`dirichlet_l`].
pub const DIRICHLET_MIN_RE: f64 = 1.2;

/// Hard cap on the dyadic index `u`.
pub const UMAX_CAP: i32 = 40;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

// ---------------------------------------------------------------------------
// Dirichlet series

/// A truncated Dirichlet series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirichletValue {
    pub value: C64,
    pub terms: u64,
    /// `sum_{n > N} d(n) n^{-sigma}` from the mean value of the divisor
    /// function; `|a(n)| <= d(n)` makes this a size estimate for the tail.
    pub tail_estimate: f64,
}

fn divisor_tail(n: u64, sigma: f64) -> f64 {
    let nf = n as f64;
    let r = sigma - 1.0;
    nf.powf(-r) * ((nf.ln() + 2.0 * EULER_GAMMA) / r + 1.0 / (r * r))
}

fn dirichlet_sum(form: &CuspFormData, s: C64, n: u64, dual: bool) -> Result<DirichletValue> {
    if !(s.re >= DIRICHLET_MIN_RE) {
        return precondition(format!(
            "Dirichlet series needs Re s >= {DIRICHLET_MIN_RE}, got {s}; use a_ell_continued inside the strip"
        ));
    }
    if n == 0 {
        return precondition("the series needs at least one term");
    }
    if n > form.num_coeffs() {
        return Err(Error::InsufficientCoefficients {
            label: form.label.clone(),
            required: n,
            available: form.num_coeffs(),
        });
    }
    let mut value = C64::new(0.0, 0.0);
    for (i, a) in form.coeffs()[..n as usize].iter().enumerate() {
        let a = if dual { a.conj() } else { *a };
        value += a * (-s * ((i + 1) as f64).ln()).exp();
    }
    Ok(DirichletValue { value, terms: n, tail_estimate: divisor_tail(n, s.re) })
}

/// `L(s, f) = sum_{n <= N} a_f(n) n^{-s}` for `Re s >= 1.2`.
pub fn dirichlet_l(form: &CuspFormData, s: C64, n: u64) -> Result<DirichletValue> {
    dirichlet_sum(form, s, n, false)
}

/// The dual series `sum_{n <= N} conj(a_f(n)) n^{-s}`, equal to `conj(L(conj(s), f))`.
pub fn dirichlet_l_dual(form: &CuspFormData, s: C64, n: u64) -> Result<DirichletValue> {
    dirichlet_sum(form, s, n, true)
}

/// `sum_f omega_f conj(a_f(ell)) L(s, f)` from the coefficient data, using
/// the first `n` coefficients of each form.
pub fn spectral_average(basis: &HarmonicBasis, ell: u64, s: C64, n: u64) -> Result<C64> {
    let mut total = C64::new(0.0, 0.0);
    for f in &basis.forms {
        total += f.omega()? * f.a(ell)?.conj() * dirichlet_l(f, s, n)?.value;
    }
    Ok(total)
}

// ---------------------------------------------------------------------------
// Dyadic window

/// The partition of unity `w(y) = b(y) / (b(y/2) + b(y) + b(2y))`, with `b`
/// the canonical bump on `[1, 4]`. It is supported in `[1, 4]` and
/// `sum_u w(x / 2^u) = 1` for every `x > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DyadicWindow {
    bump: BumpFunction,
}

impl Default for DyadicWindow {
    fn default() -> Self {
        DyadicWindow { bump: canonical_bump(1.0, 4.0).expect("fixed support is valid") }
    }
}

impl DyadicWindow {
    pub fn new() -> Self {
        Self::default()
    }

    /// `sum_u w(x / 2^u)` over every `u` with a nonzero term.
    pub fn partition_sum(&self, x: f64) -> f64 {
        let lo = (x / 4.0).log2().floor() as i32;
        let hi = x.log2().ceil() as i32;
        (lo..=hi).map(|u| self.eval(x / 2f64.powi(u))).sum()
    }
}

impl TestFunction for DyadicWindow {
    fn support(&self) -> (f64, f64) {
        (1.0, 4.0)
    }

    fn eval(&self, y: f64) -> f64 {
        let b = |t: f64| self.bump.eval(t);
        let top = b(y);
        if top == 0.0 {
            return 0.0;
        }
        top / (b(0.5 * y) + top + b(2.0 * y))
    }
}

// ---------------------------------------------------------------------------
// Continuation

fn check_space(k: u32, d: u64, chi: &DirichletCharacter, ell: u64) -> Result<()> {
    if k < 4 {
        return precondition(format!("weight must be at least 4, got {k}"));
    }
    if d == 0 || chi.modulus() != d {
        return precondition(format!("character modulus {} differs from level {d}", chi.modulus()));
    }
    if ell == 0 {
        return precondition("ell must be positive");
    }
    chi.check_parity(k)
}

fn check_half_plane(k: u32, s: C64) -> Result<()> {
    let bound = -(k as f64 - 4.0) / 2.0;
    if !(s.re > bound) || !s.im.is_finite() {
        return precondition(format!("continuation needs Re s > {bound} for weight {k}, got {s}"));
    }
    Ok(())
}

/// `G_s(y) = y^{-s} w(y)`.
fn g_s(window: &DyadicWindow, s: C64, y: f64) -> C64 {
    let w = window.eval(y);
    if w == 0.0 {
        return C64::new(0.0, 0.0);
    }
    (-s * y.ln()).exp() * w
}

struct Continuation<'a> {
    k: u32,
    d: u64,
    chi: &'a DirichletCharacter,
    ell: u64,
    s: C64,
    window: DyadicWindow,
    xi: f64,
}

impl<'a> Continuation<'a> {
    fn new(k: u32, d: u64, chi: &'a DirichletCharacter, ell: u64, s: C64, target: f64) -> Self {
        let window = DyadicWindow::new();
        let xi = spectral_cutoff(1.0, 4.0, |y| g_s(&window, s, y), target * 1e-3);
        Continuation { k, d, chi, ell, s, window, xi }
    }

    /// `I_s(X) = G_s(ell/X) + 2 pi i^{-k} chi(-1) sum_c (X/cD) sum_m ...`.
    /// `weight` scales increments in the stopping rule, so a dyadic piece
    /// entering with a small prefactor is not resolved beyond its share.
    fn i_s(&self, x: f64, trunc: &VoronoiTruncation, weight: f64) -> VoronoiReport {
        let window = self.window;
        let s = self.s;
        let engine = DualFrequencySum {
            nu: self.k - 1,
            d: self.d,
            chi: self.chi,
            ell: self.ell,
            x,
            a: 1.0,
            b: 4.0,
            amp: move |y: f64| g_s(&window, s, y),
            xi: self.xi,
            mmax: trunc.mmax,
        };
        let pref = i_pow(-(self.k as i64)) * TAU * self.chi.parity() as f64;
        let (sum, cmax, last_change, converged) = engine.adaptive(trunc, TAU * weight);
        let value = g_s(&self.window, self.s, self.ell as f64 / x) + pref * sum;
        VoronoiReport {
            value,
            cmax,
            nmax: 0,
            last_change,
            error_estimate: last_change / weight + trunc.target * 1e-3,
            converged,
        }
    }
}

/// The geometric expansion of
/// `I_s(X; ell) = sum_f omega_f conj(a_f(ell)) sum_n a_f(n) G_s(n/X)`,
/// `G_s(y) = y^{-s} w(y)` with the dyadic window `w`.
pub fn i_s_geometric(
    k: u32,
    d: u64,
    chi: &DirichletCharacter,
    ell: u64,
    s: C64,
    x: f64,
    trunc: &VoronoiTruncation,
) -> Result<VoronoiReport> {
    check_space(k, d, chi, ell)?;
    trunc.validate()?;
    if !(x > 0.0 && x.is_finite()) || !s.re.is_finite() || !s.im.is_finite() {
        return precondition(format!("I_s needs finite s and X > 0, got s = {s}, X = {x}"));
    }
    Ok(Continuation::new(k, d, chi, ell, s, trunc.target).i_s(x, trunc, 1.0))
}

/// Result of [`a_ell_continued`].
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationReport {
    pub value: C64,
    /// `2^{-us} I_s(2^u)` for `u = -1, 0, ..., umax`.
    pub terms: Vec<C64>,
    pub umax: i32,
    /// Largest modulus used by any dyadic piece.
    pub cmax: u64,
    /// Size of the dyadic tail, taken from the last computed terms.
    pub tail_estimate: f64,
    /// Sum of the per-piece error estimates plus the tail estimate.
    pub error_estimate: f64,
    pub converged: bool,
}

/// `A_ell(s) = sum_{u >= -1} 2^{-us} I_s(2^u; ell)`, valid for `Re s > -(k-4)/2`.
///
/// With `umax = None` the sum stops after three consecutive terms below
/// `trunc.target / 10` (at most `u = 40`); otherwise it runs to `umax`.
pub fn a_ell_continued(
    k: u32,
    d: u64,
    chi: &DirichletCharacter,
    ell: u64,
    s: C64,
    umax: Option<i32>,
    trunc: &VoronoiTruncation,
) -> Result<ContinuationReport> {
    check_space(k, d, chi, ell)?;
    check_half_plane(k, s)?;
    trunc.validate()?;
    if let Some(u) = umax {
        if !(-1..=UMAX_CAP).contains(&u) {
            return precondition(format!("umax must lie in [-1, {UMAX_CAP}], got {u}"));
        }
    }
    let cont = Continuation::new(k, d, chi, ell, s, trunc.target);
    let mut terms = Vec::new();
    let mut value = C64::new(0.0, 0.0);
    let mut error = 0.0;
    let mut cmax = 0;
    let mut converged = true;
    let mut quiet = 0;
    let mut u = -1;
    loop {
        let x = 2f64.powi(u);
        let scale = (-s * (u as f64 * 2f64.ln())).exp();
        let piece = cont.i_s(x, trunc, scale.norm());
        let term = scale * piece.value;
        value += term;
        terms.push(term);
        error += scale.norm() * piece.error_estimate;
        cmax = cmax.max(piece.cmax);
        converged &= piece.converged;
        quiet = if term.norm() < 0.1 * trunc.target { quiet + 1 } else { 0 };
        match umax {
            Some(top) if u >= top => break,
            None if quiet >= 3 => break,
            None if u >= UMAX_CAP => {
                converged = false;
                break;
            }
            _ => u += 1,
        }
    }
    let tail_estimate = terms.iter().rev().take(3).map(|t| t.norm()).fold(0.0, f64::max);
    Ok(ContinuationReport {
        value,
        terms,
        umax: u,
        cmax,
        tail_estimate,
        error_estimate: error + tail_estimate,
        converged,
    })
}

/// The dual average `sum_f omega_f a_f(ell) sum_n conj(a_f(n)) n^{-s}`.
///
/// Conjugating a form swaps `chi` with `conj(chi)` and keeps `omega_f`, so
/// this is the continued average of the conjugate space.
pub fn a_ell_dual_continued(
    k: u32,
    d: u64,
    chi: &DirichletCharacter,
    ell: u64,
    s: C64,
    umax: Option<i32>,
    trunc: &VoronoiTruncation,
) -> Result<ContinuationReport> {
    a_ell_continued(k, d, &chi.conjugate(), ell, s, umax, trunc)
}

// ---------------------------------------------------------------------------
// Root numbers and functional equations

/// Which functional equation applies; shared with the dual Voronoi side.
pub type RootCase = FinalVariant;

/// The constant `rho` in `L(s, f) = rho D^{1/2-s} gamma_k(1-s)/gamma_k(s) conj(L(1-conj(s), f))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootNumber {
    pub value: C64,
    pub case: RootCase,
}

/// Tolerance for `|rho| = 1` on fixture data.
pub const ROOT_MODULUS_TOL: f64 = 1e-8;

/// `i^k` at level one; `i^k chi(-1) eps_chi conj(a_f(D))` for primitive
/// `chi`; `i^k sqrt(D) mu(D) conj(a_f(D))` for trivial `chi` at square-free `D`.
///
/// Fails with [`Error::IdentityViolated`] when the data give `|rho| != 1`.
pub fn root_number(form: &CuspFormData) -> Result<RootNumber> {
    let k = form.weight;
    let d = form.level;
    let chi = &form.character;
    let case = final_variant(d, chi)?;
    let ik = i_pow(k as i64);
    let value = match case {
        FinalVariant::LevelOne => ik,
        FinalVariant::Primitive => ik * chi.parity() as f64 * arith::gauss_sum(chi) * form.a(d)?.conj(),
        FinalVariant::TrivialSquarefree => ik * (d as f64).sqrt() * arith::moebius(d) as f64 * form.a(d)?.conj(),
    };
    if (value.norm() - 1.0).abs() > ROOT_MODULUS_TOL {
        return Err(Error::IdentityViolated(format!(
            "root number of {} has modulus {} instead of 1",
            form.label,
            value.norm()
        )));
    }
    Ok(RootNumber { value, case })
}

/// Both sides of the functional equation for `A_1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeCheck {
    pub s: C64,
    /// `A_1(s)`.
    pub lhs: C64,
    /// `rho D^{1/2-s} gamma_k(1-s)/gamma_k(s) conj(A_1(1-conj(s)))`.
    pub rhs: C64,
    pub root: RootNumber,
    pub residual: f64,
    /// Combined truncation estimate of both continuations.
    pub error_estimate: f64,
    pub converged: bool,
}

/// Functional-equation residual `|A_1(s) - rho D^{1/2-s} R(s) conj(A_1(1-conj(s)))|`
/// with `R(s) = gamma_k(1-s)/gamma_k(s)`.
///
/// `A_1 = sum_f omega_f L(s, f)`, so the identity holds whenever all forms
/// share `rho`; at level one that is automatic, otherwise `form` supplies
/// `a_f(D)` for a one-dimensional space.
pub fn fe_residual(
    k: u32,
    d: u64,
    chi: &DirichletCharacter,
    form: Option<&CuspFormData>,
    s: C64,
    umax: Option<i32>,
    trunc: &VoronoiTruncation,
) -> Result<FeCheck> {
    check_space(k, d, chi, 1)?;
    if !(s.re > 0.0 && s.re < 1.0) {
        return precondition(format!("functional-equation check needs 0 < Re s < 1, got {s}"));
    }
    let root = match form {
        Some(f) => {
            if f.weight != k || f.level != d || !f.character.agrees_with(chi) {
                return precondition(format!("form {} does not belong to the requested space", f.label));
            }
            root_number(f)?
        }
        None if d == 1 => RootNumber { value: i_pow(k as i64), case: FinalVariant::LevelOne },
        None => {
            return precondition("level D > 1 needs form data for a_f(D) in the root number");
        }
    };
    let dual_point = C64::new(1.0, 0.0) - s.conj();
    let primal = a_ell_continued(k, d, chi, 1, s, umax, trunc)?;
    let dual = if dual_point == s {
        primal.clone()
    } else {
        a_ell_continued(k, d, chi, 1, dual_point, umax, trunc)?
    };
    let level = (C64::new(0.5, 0.0) - s) * (d as f64).ln();
    let factor = root.value * level.exp() * gamma_ratio(k, s)?;
    let rhs = factor * dual.value.conj();
    Ok(FeCheck {
        s,
        lhs: primal.value,
        rhs,
        root,
        residual: (primal.value - rhs).norm(),
        error_estimate: primal.error_estimate + factor.norm() * dual.error_estimate,
        converged: primal.converged && dual.converged,
    })
}

// ---------------------------------------------------------------------------
// Isolating individual forms

/// Largest accepted infinity-norm condition number of the coefficient matrix.
pub const ISOLATION_COND_MAX: f64 = 1e6;

/// Gauss-Jordan inverse with partial pivoting; `None` if singular.
fn invert(a: &[Vec<C64>]) -> Option<Vec<Vec<C64>>> {
    let n = a.len();
    let mut m: Vec<Vec<C64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| C64::new(if i == j { 1.0 } else { 0.0 }, 0.0)));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| m[x][col].norm().total_cmp(&m[y][col].norm()))?;
        if m[piv][col].norm() == 0.0 {
            return None;
        }
        m.swap(col, piv);
        let p = m[col][col];
        for v in m[col].iter_mut() {
            *v /= p;
        }
        for r in 0..n {
            if r != col {
                let f = m[r][col];
                if f != C64::new(0.0, 0.0) {
                    for j in 0..2 * n {
                        let t = m[col][j];
                        m[r][j] -= f * t;
                    }
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[n..].to_vec()).collect())
}

fn inf_norm(a: &[Vec<C64>]) -> f64 {
    a.iter().map(|r| r.iter().map(|v| v.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// `A_ij = conj(a_{f_i}(ell_j))` and its inverse, or an error naming `ells`.
fn coefficient_system(basis: &HarmonicBasis, ells: &[u64]) -> Result<(Vec<Vec<C64>>, Vec<Vec<C64>>)> {
    let d = basis.dimension();
    if d == 0 || d > 3 {
        return precondition(format!("isolation handles dimensions 1 to 3, got {d}"));
    }
    if ells.len() != d {
        return precondition(format!("need {d} values of ell, got {}", ells.len()));
    }
    let a: Vec<Vec<C64>> = basis
        .forms
        .iter()
        .map(|f| ells.iter().map(|&l| f.a(l).map(|v| v.conj())).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let inv = invert(&a).ok_or_else(|| Error::IllConditioned(format!("coefficient matrix is singular for ell = {ells:?}")))?;
    let cond = inf_norm(&a) * inf_norm(&inv);
    if !(cond < ISOLATION_COND_MAX) {
        return Err(Error::IllConditioned(format!(
            "condition number {cond:.3e} of the coefficient matrix exceeds {ISOLATION_COND_MAX:e} for ell = {ells:?}"
        )));
    }
    Ok((a, inv))
}

/// Greedy search over `ell <= max_ell` for a well-conditioned system: each
/// step adds the `ell` that minimises the condition number of the leading block.
pub fn choose_ells(basis: &HarmonicBasis, max_ell: u64) -> Result<Vec<u64>> {
    let d = basis.dimension();
    let mut chosen: Vec<u64> = Vec::new();
    let mut tried = Vec::new();
    for step in 0..d {
        let sub = HarmonicBasis { forms: basis.forms[..=step].to_vec() };
        let mut best: Option<(f64, u64)> = None;
        for l in 1..=max_ell {
            if chosen.contains(&l) {
                continue;
            }
            let mut ells = chosen.clone();
            ells.push(l);
            tried.push(ells.clone());
            if let Ok((a, inv)) = coefficient_system(&sub, &ells) {
                let cond = inf_norm(&a) * inf_norm(&inv);
                if best.is_none_or(|(c, _)| cond < c) {
                    best = Some((cond, l));
                }
            }
        }
        match best {
            Some((_, l)) => chosen.push(l),
            None => {
                return Err(Error::IllConditioned(format!(
                    "no well-conditioned ell set with ell <= {max_ell}; tried {tried:?}"
                )))
            }
        }
    }
    Ok(chosen)
}

/// Solves `(G_1, ..., G_d) = (omega_1 L_1, ..., omega_d L_d) A` for the
/// individual `L_i`, given the averages `G_j = A_{ell_j}(s)`.
pub fn isolate_from_averages(basis: &HarmonicBasis, ells: &[u64], averages: &[C64]) -> Result<Vec<C64>> {
    let (_, inv) = coefficient_system(basis, ells)?;
    if averages.len() != ells.len() {
        return precondition("one average per ell is required");
    }
    basis
        .forms
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let v: C64 = averages.iter().enumerate().map(|(j, g)| g * inv[j][i]).sum();
            Ok(v / f.omega()?)
        })
        .collect()
}

/// `L(s, f_i)` for every form of `basis`, from the continued averages
/// `A_{ell_j}(s)`.
pub fn isolate_lvalues(
    basis: &HarmonicBasis,
    ells: &[u64],
    s: C64,
    umax: Option<i32>,
    trunc: &VoronoiTruncation,
) -> Result<Vec<C64>> {
    coefficient_system(basis, ells)?;
    let (k, d, chi) = match (basis.weight(), basis.level(), basis.character()) {
        (Some(k), Some(d), Some(chi)) => (k, d, chi.clone()),
        _ => return precondition("isolation needs a non-empty basis"),
    };
    let averages = ells
        .iter()
        .map(|&l| a_ell_continued(k, d, &chi, l, s, umax, trunc).map(|r| r.value))
        .collect::<Result<Vec<_>>>()?;
    isolate_from_averages(basis, ells, &averages)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_partition_of_unity() {
        let w = DyadicWindow::new();
        for i in 0..400 {
            let x = 0.3 * 1.0137f64.powi(i);
            assert!((w.partition_sum(x) - 1.0).abs() < 1e-12, "x = {x}");
        }
        assert_eq!(w.eval(1.0), 0.0);
        assert_eq!(w.eval(4.0), 0.0);
    }

    #[test]
    fn inverse_of_small_matrices() {
        let a = vec![
            vec![C64::new(2.0, 1.0), C64::new(0.5, 0.0), C64::new(0.0, -1.0)],
            vec![C64::new(1.0, 0.0), C64::new(3.0, 0.0), C64::new(0.2, 0.3)],
            vec![C64::new(0.0, 0.0), C64::new(1.0, 1.0), C64::new(1.0, 0.0)],
        ];
        let inv = invert(&a).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let p: C64 = (0..3).map(|t| a[i][t] * inv[t][j]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((p - want).norm() < 1e-14);
            }
        }
        assert!(invert(&[vec![C64::new(1.0, 0.0), C64::new(2.0, 0.0)], vec![C64::new(2.0, 0.0), C64::new(4.0, 0.0)]]).is_none());
    }

    #[test]
    fn divisor_tail_decreases() {
        assert!(divisor_tail(20_000, 2.0) < divisor_tail(10_000, 2.0));
        assert!(divisor_tail(10_000, 2.0) < 1e-2);
    }

    #[test]
    fn half_plane_and_strip_preconditions() {
        let chi = DirichletCharacter::trivial(1);
        let t = VoronoiTruncation::default();
        assert!(matches!(
            a_ell_continued(12, 1, &chi, 1, C64::new(-4.5, 0.0), None, &t),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            fe_residual(12, 1, &chi, None, C64::new(1.5, 0.0), None, &t),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            fe_residual(6, 5, &DirichletCharacter::trivial(5), None, C64::new(0.5, 0.0), None, &t),
            Err(Error::Precondition(_))
        ));
    }
}
