//! Numerical toolkit for the trace-formula proof of GL(2) functional equations.
//!
//! The crate evaluates both sides of the identities that drive a
//! "beyond endoscopy" derivation of the functional equation of holomorphic
//! cusp forms: twisted Kloosterman sums, the Petersson trace formula, an
//! averaged Voronoi formula computed through two independent geometric
//! expansions, and the dyadic trace-formula continuation of averaged
//! L-series into the critical strip.
//!
//! Module map:
//! - [`arith`]: characters, Kloosterman/Gauss/Ramanujan sums, arithmetic lemmas.
//! - [`specfun`]: Bessel J, complex log-gamma, gamma factors, Mellin-Barnes.
//! - [`quadrature`]: Gauss-Legendre and trapezoid rules.
//! - [`transforms`]: bump functions, Hankel transform, Weber and Poisson checks.
//! - [`forms`]: cusp-form fixtures and Hecke-structure validation.
//! - [`traceformula`]: Petersson spectral and geometric sides.
//! - [`voronoi`]: averaged Voronoi identity, spectral and geometric.
//! - [`lfun`]: Dirichlet series, continuation, root numbers, FE residuals.
//! - [`cli`]: command-line front end.

pub mod arith;
pub mod cli;
mod error;
pub mod forms;
pub mod lfun;
pub mod quadrature;
pub mod specfun;
pub mod traceformula;
pub mod transforms;
pub mod voronoi;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Maps `f` over `0..n` on the rayon pool and returns results in index order.
///
/// Callers reduce the returned vector sequentially, so sums do not depend on
/// the thread count.
pub(crate) fn ordered_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

/// `i^e` for integer `e`, exact by case analysis.
pub fn i_pow(e: i64) -> C64 {
    match e.rem_euclid(4) {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

/// `e(x) = exp(2 pi i x)`.
#[inline]
pub fn e(x: f64) -> C64 {
    let t = std::f64::consts::TAU * x;
    C64::new(t.cos(), t.sin())
}

/// `e(p/q)` with the fraction reduced first, so large numerators keep full accuracy.
#[inline]
pub fn e_frac(p: i64, q: u64) -> C64 {
    let r = p.rem_euclid(q as i64) as f64 / q as f64;
    e(r)
}
