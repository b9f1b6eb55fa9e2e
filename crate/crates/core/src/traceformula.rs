//! The Petersson trace formula: harmonic spectral averages of coefficient
//! products against the delta term plus the Kloosterman-Bessel series.

use std::f64::consts::{PI, TAU};

use crate::arith::{self, DirichletCharacter, KloostermanKernel};
use crate::error::{precondition, Error, Result};
use crate::forms::HarmonicBasis;
use crate::specfun::{bessel_j_unchecked, ln_gamma};
use crate::{i_pow, ordered_map, C64};

/// A truncated series value with its error budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationReport {
    pub value: C64,
    pub cmax: u64,
    /// Explicit bound on the omitted terms `c > cmax`.
    pub tail_bound: f64,
    /// Floating-point error estimate of the computed terms.
    pub quadrature_error: f64,
}

impl TruncationReport {
    pub fn budget(&self) -> f64 {
        self.tail_bound + self.quadrature_error
    }
}

fn check_space(k: u32, d: u64, chi: &DirichletCharacter) -> Result<()> {
    if k < 4 {
        return precondition(format!("weight must be at least 4, got {k}"));
    }
    if d == 0 || chi.modulus() != d {
        return precondition(format!("character modulus {} differs from level {d}", chi.modulus()));
    }
    chi.check_parity(k)
}

/// Geometric side at one pair `(m, n)`:
/// `delta(m = n) + 2 pi i^{-k} sum_{D | c <= cmax} S_chi(m, n; c)/c J_{k-1}(4 pi sqrt(mn)/c)`.
pub fn petersson_geometric(
    k: u32,
    d: u64,
    chi: &DirichletCharacter,
    m: u64,
    n: u64,
    cmax: u64,
) -> Result<TruncationReport> {
    Ok(petersson_geometric_grid(k, d, chi, &[(m, n)], cmax)?[0])
}

/// Geometric side for many pairs at once; one Kloosterman table per modulus
/// is shared by all pairs.
pub fn petersson_geometric_grid(
    k: u32,
    d: u64,
    chi: &DirichletCharacter,
    pairs: &[(u64, u64)],
    cmax: u64,
) -> Result<Vec<TruncationReport>> {
    check_space(k, d, chi)?;
    if cmax < d {
        return precondition(format!("cmax = {cmax} must be at least the level {d}"));
    }
    if pairs.iter().any(|&(m, n)| m == 0 || n == 0) {
        return precondition("m and n must be positive");
    }
    let nu = k - 1;
    let moduli: Vec<u64> = (1..=cmax / d).map(|j| j * d).collect();
    // Per modulus: the term and its rounding estimate for every pair.
    let cells: Vec<Result<Vec<(C64, f64)>>> = ordered_map(moduli.len(), |i| {
        let c = moduli[i];
        let kernel = KloostermanKernel::new(c, Some(chi))?;
        let units = arith::euler_phi(c) as f64;
        Ok(pairs
            .iter()
            .map(|&(m, n)| {
                let y = 4.0 * PI * ((m * n) as f64).sqrt() / c as f64;
                let j = bessel_j_unchecked(nu, y);
                let s = kernel.sum(m as i64, n as i64);
                let term = s * (j / c as f64);
                let err = (units * 4.0 * f64::EPSILON + s.norm() * 1e-14) * j.abs() / c as f64;
                (term, err)
            })
            .collect())
    });
    let mut sums = vec![C64::new(0.0, 0.0); pairs.len()];
    let mut errs = vec![0.0; pairs.len()];
    for cell in cells {
        for (p, (t, e)) in cell?.into_iter().enumerate() {
            sums[p] += t;
            errs[p] += e;
        }
    }
    let pref = i_pow(-(k as i64)) * TAU;
    let tails = TailModel::new(k, d, chi, cmax);
    Ok(pairs
        .iter()
        .enumerate()
        .map(|(p, &(m, n))| {
            let delta = if m == n { 1.0 } else { 0.0 };
            let value = pref * sums[p] + delta;
            TruncationReport {
                value,
                cmax,
                tail_bound: tails.bound(m, n),
                quadrature_error: TAU * errs[p] + 4.0 * f64::EPSILON * value.norm(),
            }
        })
        .collect())
}

/// `max_n d(n) / n^{1/4}`, from the prime-by-prime maximum of `(a+1)/p^{a/4}`.
///
/// Primes above 16 contribute factors at most 1, so only small primes matter.
fn divisor_quarter_constant() -> f64 {
    let mut k = 1.0;
    for p in [2.0f64, 3.0, 5.0, 7.0, 11.0, 13.0] {
        let best = (0..64).map(|a| (a as f64 + 1.0) / p.powf(a as f64 / 4.0)).fold(0.0, f64::max);
        k *= best;
    }
    k
}

/// Tail bound for the omitted moduli `c > cmax`, `D | c`.
///
/// Each term is bounded by `2 pi d(c) (m,n,c)^{1/2} c^{1/2} q^{1/2} / c`
/// times `min(1, (y/2)^{k-1}/(k-1)!)`, `y = 4 pi sqrt(mn)/c`, with `q` the
/// conductor of the twist. Terms up to `16 cmax` are summed explicitly with
/// exact divisor counts; beyond that `d(c) <= K c^{1/4}` turns the sum into
/// an elementary integral.
struct TailModel {
    k: u32,
    d: u64,
    cond: f64,
    cmax: u64,
    c1: u64,
    dcount: Vec<u32>,
}

impl TailModel {
    fn new(k: u32, d: u64, chi: &DirichletCharacter, cmax: u64) -> Self {
        let c1 = 16 * cmax;
        TailModel {
            k,
            d,
            cond: chi.conductor() as f64,
            cmax,
            c1,
            dcount: arith::divisor_counts_upto(c1 as usize),
        }
    }

    fn bound(&self, m: u64, n: u64) -> f64 {
        let nu = (self.k - 1) as f64;
        let ln_fact = ln_gamma(C64::new(nu + 1.0, 0.0)).re;
        let r = 2.0 * PI * ((m * n) as f64).sqrt();
        let g = arith::gcd(m as i64, n as i64);
        let mut explicit = 0.0;
        let mut c = (self.cmax / self.d + 1) * self.d;
        while c <= self.c1 {
            let gc = arith::gcd(g as i64, c as i64) as f64;
            let cf = c as f64;
            let jb = (nu * (r / cf).ln() - ln_fact).exp().min(1.0);
            explicit += self.dcount[c as usize] as f64 * (gc * self.cond / cf).sqrt() * jb;
            c += self.d;
        }
        let integral = power_tail(nu, self.d as f64, g as f64 * self.cond, r, (self.c1 / self.d) as f64);
        TAU * explicit + integral
    }
}

/// `sum_{j > j0} 2 pi K (Dj)^{1/4} (g_q / (Dj))^{1/2} (r / (Dj))^nu / nu!`,
/// the Weil-Bessel majorant of a Kloosterman-Bessel series over moduli `Dj`
/// with `r = 2 pi sqrt(mn)` and `g_q = gcd(m, n) * conductor`, bounded by
/// the integral `A D^{-1/4-nu} j0^{3/4-nu} / (nu - 3/4)`.
pub(crate) fn power_tail(nu: f64, d: f64, g_q: f64, r: f64, j0: f64) -> f64 {
    let ln_fact = ln_gamma(C64::new(nu + 1.0, 0.0)).re;
    let ln_a = TAU.ln() + divisor_quarter_constant().ln() + 0.5 * g_q.ln() + nu * r.ln() - ln_fact;
    (ln_a - (0.25 + nu) * d.ln() + (0.75 - nu) * j0.ln()).exp() / (nu - 0.75)
}

/// Tail bound alone, for truncation planning.
pub fn petersson_tail_bound(k: u32, d: u64, chi: &DirichletCharacter, m: u64, n: u64, cmax: u64) -> f64 {
    TailModel::new(k, d, chi, cmax.max(d)).bound(m, n)
}

/// Smallest power-of-two multiple of `D` whose tail bound is below `target`
/// (capped at `2^20`).
pub fn cmax_for_tail(k: u32, d: u64, chi: &DirichletCharacter, m: u64, n: u64, target: f64) -> u64 {
    let mut cmax = d.max(16);
    while cmax < (1 << 20) && petersson_tail_bound(k, d, chi, m, n, cmax) >= target {
        cmax *= 2;
    }
    cmax
}

/// Spectral side `sum_f omega_f conj(a_f(m)) a_f(n)`.
pub fn petersson_spectral(basis: &HarmonicBasis, m: u64, n: u64) -> Result<C64> {
    let mut total = C64::new(0.0, 0.0);
    for f in &basis.forms {
        total += f.omega()? * f.a(m)?.conj() * f.a(n)?;
    }
    Ok(total)
}

/// Outcome of [`verify_petersson`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeterssonCheck {
    pub residual: f64,
    /// `tail_bound + quadrature_error + 1e-10`.
    pub budget: f64,
    pub spectral: C64,
    pub geometric: TruncationReport,
}

impl PeterssonCheck {
    pub fn passed(&self) -> bool {
        self.residual <= self.budget
    }
}

/// Compares both sides of the trace formula at `(m, n)`.
pub fn verify_petersson(
    basis: &HarmonicBasis,
    k: u32,
    d: u64,
    chi: &DirichletCharacter,
    m: u64,
    n: u64,
    cmax: u64,
) -> Result<PeterssonCheck> {
    Ok(verify_petersson_grid(basis, k, d, chi, &[(m, n)], cmax)?[0])
}

/// [`verify_petersson`] over many pairs sharing the Kloosterman tables.
pub fn verify_petersson_grid(
    basis: &HarmonicBasis,
    k: u32,
    d: u64,
    chi: &DirichletCharacter,
    pairs: &[(u64, u64)],
    cmax: u64,
) -> Result<Vec<PeterssonCheck>> {
    if let (Some(bk), Some(bd)) = (basis.weight(), basis.level()) {
        if bk != k || bd != d || basis.character().map(|c| c.index()) != Some(chi.index()) {
            return Err(Error::Precondition(format!(
                "basis lives in (k, D) = ({bk}, {bd}), not ({k}, {d}) with the given character"
            )));
        }
    }
    let geo = petersson_geometric_grid(k, d, chi, pairs, cmax)?;
    pairs
        .iter()
        .zip(geo)
        .map(|(&(m, n), g)| {
            let spectral = petersson_spectral(basis, m, n)?;
            Ok(PeterssonCheck {
                residual: (spectral - g.value).norm(),
                budget: g.budget() + 1e-10,
                spectral,
                geometric: g,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::character;

    #[test]
    fn divisor_constant_bounds_divisor_counts() {
        let k = divisor_quarter_constant();
        let counts = arith::divisor_counts_upto(200_000);
        for (n, &dn) in counts.iter().enumerate().skip(1) {
            assert!(dn as f64 <= k * (n as f64).powf(0.25) + 1e-9, "n = {n}");
        }
    }

    #[test]
    fn hermitian_symmetry() {
        let chi = character(5, 1).unwrap();
        assert_eq!(chi.parity(), -1);
        let a = petersson_geometric(5, 5, &chi, 2, 3, 200).unwrap();
        let b = petersson_geometric(5, 5, &chi, 3, 2, 200).unwrap();
        assert!((a.value - b.value.conj()).norm() < 1e-12);
    }

    #[test]
    fn tail_is_monotone_and_brackets_the_change() {
        let chi = DirichletCharacter::trivial(5);
        let mut last = f64::INFINITY;
        for cmax in [20u64, 40, 80, 160] {
            let t = petersson_tail_bound(6, 5, &chi, 3, 7, cmax);
            assert!(t < last);
            last = t;
        }
        let a = petersson_geometric(6, 5, &chi, 3, 7, 40).unwrap();
        let b = petersson_geometric(6, 5, &chi, 3, 7, 640).unwrap();
        assert!((a.value - b.value).norm() <= a.tail_bound);
    }

    #[test]
    fn rejects_bad_parity_and_small_cmax() {
        let odd = character(5, 1).unwrap();
        assert!(matches!(petersson_geometric(6, 5, &odd, 1, 1, 100), Err(Error::Parity { .. })));
        let triv = DirichletCharacter::trivial(5);
        assert!(petersson_geometric(6, 5, &triv, 1, 1, 4).is_err());
        assert!(petersson_geometric(2, 5, &triv, 1, 1, 100).is_err());
    }

    #[test]
    fn empty_basis_spectral_is_zero() {
        let b = HarmonicBasis::default();
        assert_eq!(petersson_spectral(&b, 2, 3).unwrap(), C64::new(0.0, 0.0));
    }
}
