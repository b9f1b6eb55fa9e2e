//! Modular arithmetic, Dirichlet characters and exponential sums.
//!
//! Everything here is evaluated in double precision from exact integer
//! reductions: phases are computed as `e(r/c)` with `r` already reduced mod
//! `c`, so no accuracy is lost to large arguments.

use crate::error::{precondition, Error, Result};
use crate::{e, e_frac, C64};

/// Greatest common divisor (non-negative).
pub fn gcd(a: i64, b: i64) -> u64 {
    let (mut a, mut b) = (a.unsigned_abs(), b.unsigned_abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Inverse of `x` modulo `c`, normalized to `[0, c)`.
///
/// Modulo 1 every residue is its own inverse and the result is 0.
pub fn mod_inverse(x: i64, c: u64) -> Result<u64> {
    if c == 0 {
        return precondition("modulus must be positive");
    }
    if c == 1 {
        return Ok(0);
    }
    let (mut r0, mut r1) = (c as i128, x.rem_euclid(c as i64) as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 != 1 {
        return Err(Error::NotInvertible { x, modulus: c });
    }
    Ok(t0.rem_euclid(c as i128) as u64)
}

/// Prime factorization by trial division, primes ascending.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Moebius function. `moebius(0)` is defined as 0.
pub fn moebius(n: u64) -> i32 {
    if n == 0 {
        return 0;
    }
    let f = factorize(n);
    if f.iter().any(|&(_, e)| e > 1) {
        0
    } else if f.len() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Number of positive divisors.
pub fn divisor_count(n: u64) -> u64 {
    factorize(n).iter().map(|&(_, e)| e as u64 + 1).product()
}

/// Divisor counts `d(0..=n)` by sieving (`d(0)` is set to 0).
pub fn divisor_counts_upto(n: usize) -> Vec<u32> {
    let mut d = vec![0u32; n + 1];
    for i in 1..=n {
        let mut j = i;
        while j <= n {
            d[j] += 1;
            j += i;
        }
    }
    d
}

/// Euler's totient.
pub fn euler_phi(n: u64) -> u64 {
    factorize(n)
        .iter()
        .fold(n, |acc, &(p, _)| acc / p * (p - 1))
}

pub fn is_squarefree(n: u64) -> bool {
    n > 0 && moebius(n) != 0
}

/// Positive divisors of `n`, ascending.
pub fn divisors(n: u64) -> Vec<u64> {
    let mut ds = vec![1u64];
    for (p, e) in factorize(n) {
        let len = ds.len();
        let mut pk = 1;
        for _ in 0..e {
            pk *= p;
            for i in 0..len {
                ds.push(ds[i] * pk);
            }
        }
    }
    ds.sort_unstable();
    ds
}

/// `true` when every prime factor of `m` divides `d` (so `m | d^infinity`).
pub fn divides_power_of(m: u64, d: u64) -> bool {
    let mut m = m;
    loop {
        let g = gcd(m as i64, d as i64);
        if g == 1 {
            return m == 1;
        }
        while m % g == 0 {
            m /= g;
        }
    }
}

/// Decomposition `ell = ell0 * ell_prime` with `ell0 = (ell, D^inf)` and `(ell_prime, D) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LevelSplit {
    pub ell: u64,
    pub ell0: u64,
    pub ell_prime: u64,
}

pub fn level_split(ell: u64, d: u64) -> LevelSplit {
    let mut ell0 = 1;
    let mut rest = ell;
    loop {
        let g = gcd(rest as i64, d as i64);
        if g == 1 {
            break;
        }
        while rest % g == 0 {
            rest /= g;
            ell0 *= g;
        }
    }
    LevelSplit { ell, ell0, ell_prime: rest }
}

// ---------------------------------------------------------------------------
// Dirichlet characters

/// One cyclic factor of the unit group mod `D`: generator, order and the
/// prime-power modulus it lives on.
#[derive(Debug, Clone)]
struct CyclicFactor {
    prime_power: u64,
    order: u64,
    /// `dlog[x mod prime_power]` for units, `u64::MAX` elsewhere.
    dlog: Vec<u64>,
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = (r as u128 * b as u128 % m as u128) as u64;
        }
        b = (b as u128 * b as u128 % m as u128) as u64;
        e >>= 1;
    }
    r
}

fn primitive_root_prime(p: u64) -> u64 {
    if p == 2 {
        return 1;
    }
    let fs = factorize(p - 1);
    (2..p)
        .find(|&g| fs.iter().all(|&(q, _)| pow_mod(g, (p - 1) / q, p) != 1))
        .expect("every prime has a primitive root")
}

fn cyclic_table(pp: u64, gen: u64, order: u64) -> Vec<u64> {
    let mut dlog = vec![u64::MAX; pp as usize];
    let mut x = 1 % pp;
    for k in 0..order {
        dlog[x as usize] = k;
        x = x * gen % pp;
    }
    dlog
}

/// Cyclic decomposition of `(Z/D)^*`, primes ascending; `2^a` with `a >= 3`
/// contributes the factor generated by `-1` before the one generated by `5`.
fn unit_group_factors(d: u64) -> Vec<CyclicFactor> {
    let mut out = Vec::new();
    for (p, a) in factorize(d) {
        let pp = p.pow(a);
        if p == 2 {
            match a {
                1 => {}
                2 => out.push(CyclicFactor {
                    prime_power: 4,
                    order: 2,
                    dlog: cyclic_table(4, 3, 2),
                }),
                _ => {
                    let ord5 = pp / 4;
                    let mut dm = vec![u64::MAX; pp as usize];
                    let mut d5 = vec![u64::MAX; pp as usize];
                    let mut x = 1u64;
                    for k in 0..ord5 {
                        for (e0, sign) in [(0u64, x), (1u64, pp - x)] {
                            dm[sign as usize] = e0;
                            d5[sign as usize] = k;
                        }
                        x = x * 5 % pp;
                    }
                    out.push(CyclicFactor { prime_power: pp, order: 2, dlog: dm });
                    out.push(CyclicFactor { prime_power: pp, order: ord5, dlog: d5 });
                }
            }
        } else {
            let mut g = primitive_root_prime(p);
            if a > 1 && pow_mod(g, p - 1, p * p) == 1 {
                g += p;
            }
            let order = pp / p * (p - 1);
            out.push(CyclicFactor { prime_power: pp, order, dlog: cyclic_table(pp, g, order) });
        }
    }
    out
}

/// A Dirichlet character modulo `D`, stored as its full value table.
#[derive(Debug, Clone)]
pub struct DirichletCharacter {
    modulus: u64,
    index: usize,
    exponents: Vec<u64>,
    orders: Vec<u64>,
    values: Vec<C64>,
    conductor: u64,
    parity: i32,
}

impl DirichletCharacter {
    fn from_exponents(d: u64, factors: &[CyclicFactor], exponents: Vec<u64>) -> Self {
        let orders: Vec<u64> = factors.iter().map(|f| f.order).collect();
        let index = exponents
            .iter()
            .zip(&orders)
            .fold(0usize, |acc, (&j, &o)| acc * o as usize + j as usize);
        let values: Vec<C64> = (0..d)
            .map(|x| {
                if gcd(x as i64, d as i64) != 1 {
                    return C64::new(0.0, 0.0);
                }
                // Sum the phases as an exact fraction before exponentiating.
                let mut frac = 0.0f64;
                for (f, &j) in factors.iter().zip(&exponents) {
                    let l = f.dlog[(x % f.prime_power) as usize];
                    frac += ((j * l) % f.order) as f64 / f.order as f64;
                }
                e(frac.fract())
            })
            .collect();
        let parity = if d <= 2 {
            1
        } else if values[(d - 1) as usize].re > 0.0 {
            1
        } else {
            -1
        };
        let mut chi = DirichletCharacter {
            modulus: d,
            index,
            exponents,
            orders,
            values,
            conductor: d,
            parity,
        };
        chi.conductor = chi.compute_conductor();
        chi
    }

    /// Smallest `q | D` such that `chi` is trivial on units `x = 1 (mod q)`.
    fn compute_conductor(&self) -> u64 {
        let d = self.modulus;
        for q in divisors(d) {
            let induced = (0..d)
                .filter(|&x| x % q == 1 % q && gcd(x as i64, d as i64) == 1)
                .all(|x| (self.values[x as usize] - 1.0).norm() < 1e-9);
            if induced {
                return q;
            }
        }
        d
    }

    /// The trivial (principal) character modulo `d`.
    pub fn trivial(d: u64) -> Self {
        let factors = unit_group_factors(d);
        let exps = vec![0; factors.len()];
        Self::from_exponents(d, &factors, exps)
    }

    /// Builds a character from an explicit value table and locates its
    /// position in the enumeration of [`build_characters`].
    pub fn from_values(values: &[C64]) -> Result<Self> {
        let d = values.len() as u64;
        if d == 0 {
            return precondition("empty character table");
        }
        build_characters(d)
            .into_iter()
            .find(|chi| chi.values.iter().zip(values).all(|(a, b)| (a - b).norm() < 1e-9))
            .ok_or_else(|| {
                Error::Precondition(format!("value table of length {d} is not a Dirichlet character"))
            })
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// Position in the CRT-lexicographic enumeration; 0 is the trivial character.
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    /// `chi(x)` for any integer `x`.
    #[inline]
    pub fn value(&self, x: i64) -> C64 {
        self.values[x.rem_euclid(self.modulus as i64) as usize]
    }

    /// `conj(chi(x))`.
    #[inline]
    pub fn conj_value(&self, x: i64) -> C64 {
        self.value(x).conj()
    }

    /// Same modulus and the same values up to rounding.
    pub fn agrees_with(&self, other: &DirichletCharacter) -> bool {
        self.modulus == other.modulus
            && self.values.iter().zip(&other.values).all(|(a, b)| (a - b).norm() < 1e-12)
    }

    pub fn conductor(&self) -> u64 {
        self.conductor
    }

    pub fn is_primitive(&self) -> bool {
        self.conductor == self.modulus
    }

    pub fn is_trivial(&self) -> bool {
        self.exponents.iter().all(|&j| j == 0)
    }

    /// `chi(-1)` as `+1` or `-1`.
    pub fn parity(&self) -> i32 {
        self.parity
    }

    /// The complex-conjugate character.
    pub fn conjugate(&self) -> Self {
        let factors = unit_group_factors(self.modulus);
        let exps = self
            .exponents
            .iter()
            .zip(&self.orders)
            .map(|(&j, &o)| (o - j) % o)
            .collect();
        Self::from_exponents(self.modulus, &factors, exps)
    }

    /// Checks `chi(-1) = (-1)^k`.
    pub fn check_parity(&self, k: u32) -> Result<()> {
        let want = if k % 2 == 0 { 1 } else { -1 };
        if self.parity != want {
            return Err(Error::Parity { weight: k, parity: self.parity });
        }
        Ok(())
    }
}

/// All `phi(D)` characters modulo `D` in CRT-lexicographic order.
///
/// The unit group is split into cyclic factors by prime power (ascending
/// primes; for `2^a`, `a >= 3`, the `-1` factor precedes the `5` factor) and
/// characters are enumerated by their exponent vectors, first factor most
/// significant.
pub fn build_characters(d: u64) -> Vec<DirichletCharacter> {
    assert!(d >= 1, "modulus must be positive");
    let factors = unit_group_factors(d);
    let orders: Vec<u64> = factors.iter().map(|f| f.order).collect();
    let total: u64 = orders.iter().product();
    (0..total)
        .map(|mut idx| {
            let mut exps = vec![0u64; orders.len()];
            for i in (0..orders.len()).rev() {
                exps[i] = idx % orders[i];
                idx /= orders[i];
            }
            DirichletCharacter::from_exponents(d, &factors, exps)
        })
        .collect()
}

/// The character of modulus `d` at position `index` of [`build_characters`].
pub fn character(d: u64, index: usize) -> Result<DirichletCharacter> {
    if d == 0 {
        return precondition("modulus must be positive");
    }
    let mut all = build_characters(d);
    if index >= all.len() {
        return precondition(format!(
            "character index {index} out of range: modulus {d} has {} characters",
            all.len()
        ));
    }
    Ok(all.swap_remove(index))
}

// ---------------------------------------------------------------------------
// Exponential sums

/// Plain Kloosterman sum `S(m, n; c)`.
pub fn kloosterman(m: i64, n: i64, c: u64) -> f64 {
    assert!(c >= 1, "modulus must be positive");
    let ci = c as i64;
    let (m, n) = (m.rem_euclid(ci) as u128, n.rem_euclid(ci) as u128);
    let mut s = 0.0;
    for x in 0..c {
        if gcd(x as i64, ci) != 1 {
            continue;
        }
        let xb = mod_inverse(x as i64, c).unwrap() as u128;
        let r = ((m * xb + n * x as u128) % c as u128) as f64 / c as f64;
        s += (std::f64::consts::TAU * r).cos();
    }
    s
}

/// Twisted Kloosterman sum `S_chi(m, n; c) = sum* conj(chi(x)) e((m xbar + n x)/c)`.
pub fn twisted_kloosterman(chi: &DirichletCharacter, m: i64, n: i64, c: u64) -> Result<C64> {
    if c == 0 || c % chi.modulus() != 0 {
        return precondition(format!(
            "twisted Kloosterman modulus {c} must be a multiple of {}",
            chi.modulus()
        ));
    }
    let ci = c as i64;
    let (m, n) = (m.rem_euclid(ci) as u128, n.rem_euclid(ci) as u128);
    let mut s = C64::new(0.0, 0.0);
    for x in 0..c {
        if gcd(x as i64, ci) != 1 {
            continue;
        }
        let xb = mod_inverse(x as i64, c)? as u128;
        let r = ((m * xb + n * x as u128) % c as u128) as i64;
        s += chi.conj_value(x as i64) * e_frac(r, c);
    }
    Ok(s)
}

/// Reduced residues `x mod c` paired with their inverses, ascending in `x`.
///
/// One extended-Euclid pass per `x <= c/2` yields both the coprimality test
/// and the inverse; the upper half follows from `(c - x)^{-1} = c - x^{-1}`.
pub fn units_with_inverses(c: u64) -> Vec<(u64, u64)> {
    if c == 1 {
        return vec![(0, 0)];
    }
    let ci = c as i64;
    let mut low = Vec::new();
    for x in 1..=c / 2 {
        let (mut r0, mut r1) = (ci, x as i64);
        let (mut t0, mut t1) = (0i64, 1i64);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (t0, t1) = (t1, t0 - q * t1);
        }
        if r0 == 1 {
            low.push((x, t0.rem_euclid(ci) as u64));
        }
    }
    let mut out = low.clone();
    for &(x, xb) in low.iter().rev() {
        if 2 * x != c {
            out.push((c - x, c - xb));
        }
    }
    out
}

/// `e(j/c)` for `j = 0..c`, assembled from two tables of length about
/// `sqrt c`, so only `O(sqrt c)` transcendental evaluations are needed.
pub fn phase_table(c: u64) -> Vec<C64> {
    let b = ((c as f64).sqrt().ceil() as u64).max(1);
    let lo: Vec<C64> = (0..b).map(|j| e_frac(j as i64, c)).collect();
    let hi: Vec<C64> = (0..c.div_ceil(b)).map(|j| e_frac((j * b) as i64, c)).collect();
    (0..c).map(|j| hi[(j / b) as usize] * lo[(j % b) as usize]).collect()
}

/// Reusable tables for many Kloosterman sums to one modulus `c`.
///
/// Stores the reduced residues with their inverses and twist weights, plus a
/// table of `e(j/c)`, so each sum costs one table lookup per residue.
#[derive(Debug, Clone)]
pub struct KloostermanKernel {
    c: u64,
    units: Vec<(u64, u64)>,
    weights: Vec<C64>,
    phases: Vec<C64>,
}

impl KloostermanKernel {
    /// `chi = None` gives untwisted sums.
    pub fn new(c: u64, chi: Option<&DirichletCharacter>) -> Result<Self> {
        if c == 0 {
            return precondition("modulus must be positive");
        }
        if let Some(ch) = chi {
            if c % ch.modulus() != 0 {
                return precondition(format!("modulus {c} not divisible by {}", ch.modulus()));
            }
        }
        let units = units_with_inverses(c);
        let weights = units
            .iter()
            .map(|&(x, _)| chi.map_or(C64::new(1.0, 0.0), |ch| ch.conj_value(x as i64)))
            .collect();
        Ok(KloostermanKernel { c, units, weights, phases: phase_table(c) })
    }

    pub fn modulus(&self) -> u64 {
        self.c
    }

    pub fn sum(&self, m: i64, n: i64) -> C64 {
        let c = self.c;
        let m = m.rem_euclid(c as i64) as u64;
        let n = n.rem_euclid(c as i64) as u64;
        let mut s = C64::new(0.0, 0.0);
        for (&(x, xb), w) in self.units.iter().zip(&self.weights) {
            let r = ((m as u128 * xb as u128 + n as u128 * x as u128) % c as u128) as usize;
            s += w * self.phases[r];
        }
        s
    }
}

/// Normalized Gauss sum `D^{-1/2} sum chi(a) e(a/D)`.
pub fn gauss_sum(chi: &DirichletCharacter) -> C64 {
    let d = chi.modulus();
    let s: C64 = (0..d).map(|a| chi.value(a as i64) * e_frac(a as i64, d)).sum();
    s / (d as f64).sqrt()
}

/// Ramanujan sum `sum*_{a mod D} e(a/D)`, rounded from its numeric value.
pub fn ramanujan_sum(d: u64) -> i64 {
    assert!(d >= 1, "modulus must be positive");
    let s: f64 = (0..d)
        .filter(|&a| gcd(a as i64, d as i64) == 1)
        .map(|a| e_frac(a as i64, d).re)
        .sum();
    s.round() as i64
}

/// Weil-type bound `d(c) (m, n, c)^{1/2} c^{1/2}` for `|S(m, n; c)|`.
pub fn weil_bound(m: i64, n: i64, c: u64) -> f64 {
    let g = gcd(gcd(m, n) as i64, c as i64) as f64;
    divisor_count(c) as f64 * g.sqrt() * (c as f64).sqrt()
}

/// Both sides of the twisted multiplicativity relation
/// `S_chi(ell0 D n, ell'; cD) = S(n, ell Dbar; c) conj(chi(c)) chi(ell') eps_{conj chi} sqrt(D)`.
pub fn check_twisted_multiplicativity(
    chi: &DirichletCharacter,
    ell: u64,
    n: u64,
    c: u64,
) -> Result<(C64, C64)> {
    let d = chi.modulus();
    if d <= 1 || !chi.is_primitive() {
        return precondition("twisted multiplicativity needs a primitive character of modulus > 1");
    }
    if c == 0 || gcd(c as i64, d as i64) != 1 {
        return precondition(format!("c = {c} must be coprime to D = {d}"));
    }
    let sp = level_split(ell, d);
    let lhs = twisted_kloosterman(chi, (sp.ell0 * d * n) as i64, sp.ell_prime as i64, c * d)?;
    let dbar = mod_inverse(d as i64, c)?;
    let plain = kloosterman(n as i64, ((ell as u128 * dbar as u128) % c as u128) as i64, c);
    let rhs = plain
        * chi.conj_value(c as i64)
        * chi.value(sp.ell_prime as i64)
        * gauss_sum(&chi.conjugate())
        * (d as f64).sqrt();
    Ok((lhs, rhs))
}

/// `true` when some prime `p` has `p | m`, `p` not dividing `n`, and `p^2 | c`.
///
/// This is the character-free hypothesis; for twisted sums it does not
/// suffice on its own, see [`vanishing_applies`].
pub fn vanishing_hypothesis(m: i64, n: i64, c: u64) -> bool {
    factorize(c).iter().any(|&(p, e)| {
        let p = p as i64;
        e >= 2 && m % p == 0 && n % p != 0
    })
}

/// `true` when some prime `p` has `p | m`, `p` not dividing `n`, `p^a || c`
/// with `a >= 2`, and the `p`-part of the conductor of `chi` divides `p^{a-1}`.
///
/// The conductor clause makes `x -> conj(chi)(1 + x p^{a-1})` trivial, which
/// is what forces the sum to vanish. Without it the sum can be nonzero, e.g.
/// `S_chi(2, 1; 4) = -2i` for the primitive character mod 4.
pub fn vanishing_applies(chi: &DirichletCharacter, m: i64, n: i64, c: u64) -> bool {
    let cond = chi.conductor();
    factorize(c).iter().any(|&(p, e)| {
        let pe = p.pow(e);
        e >= 2 && m % p as i64 == 0 && n % p as i64 != 0 && cond % pe != 0
    })
}

/// Evaluates the vanishing criterion for `S_chi(m, n; c)`.
///
/// Returns whether [`vanishing_applies`]; when it does, the sum is computed
/// and an error is returned if it exceeds `1e-9 c` in modulus.
pub fn check_vanishing(chi: &DirichletCharacter, m: i64, n: i64, c: u64) -> Result<bool> {
    if c == 0 || c % chi.modulus() != 0 {
        return precondition(format!("modulus {c} not divisible by {}", chi.modulus()));
    }
    if !vanishing_applies(chi, m, n, c) {
        return Ok(false);
    }
    let s = twisted_kloosterman(chi, m, n, c)?;
    if s.norm() >= 1e-9 * c as f64 {
        return Err(Error::IdentityViolated(format!(
            "S_chi({m},{n};{c}) = {s} should vanish"
        )));
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real_char_mod5() -> DirichletCharacter {
        build_characters(5)
            .into_iter()
            .find(|c| !c.is_trivial() && c.values().iter().all(|v| v.im.abs() < 1e-12))
            .unwrap()
    }

    #[test]
    fn unit_tables() {
        for c in 1..200u64 {
            let u = units_with_inverses(c);
            assert_eq!(u.len() as u64, euler_phi(c));
            for &(x, xb) in &u {
                assert_eq!(gcd(x as i64, c as i64), 1);
                assert_eq!((x * xb) % c, 1 % c);
            }
            assert!(u.windows(2).all(|w| w[0].0 < w[1].0));
            let p = phase_table(c);
            for (j, v) in p.iter().enumerate() {
                assert!((v - e_frac(j as i64, c)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn mod_inverse_examples() {
        assert_eq!(mod_inverse(1, 2).unwrap(), 1);
        assert_eq!(mod_inverse(3, 10).unwrap(), 7);
        assert_eq!(mod_inverse(5, 7).unwrap(), 3);
        assert_eq!(mod_inverse(-3, 10).unwrap(), 3);
        assert!(matches!(mod_inverse(4, 10), Err(Error::NotInvertible { .. })));
    }

    #[test]
    fn moebius_examples() {
        assert_eq!(moebius(1), 1);
        assert_eq!(moebius(5), -1);
        assert_eq!(moebius(12), 0);
        assert_eq!(moebius(30), -1);
        assert_eq!(moebius(6), 1);
    }

    #[test]
    fn divisor_helpers_agree() {
        let sieve = divisor_counts_upto(500);
        for n in 1..=500u64 {
            assert_eq!(sieve[n as usize] as u64, divisor_count(n));
            assert_eq!(divisors(n).len() as u64, divisor_count(n));
        }
        assert_eq!(euler_phi(12), 4);
        assert!(divides_power_of(8, 6));
        assert!(!divides_power_of(9, 6 * 5 / 3));
    }

    #[test]
    fn character_counts_and_examples() {
        let one = build_characters(1);
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].values(), &[C64::new(1.0, 0.0)]);
        assert_eq!(build_characters(3).len(), 2);
        let chi = real_char_mod5();
        assert!((chi.value(2) + 1.0).norm() < 1e-12);
        for d in 1..=40u64 {
            assert_eq!(build_characters(d).len() as u64, euler_phi(d), "D = {d}");
        }
    }

    #[test]
    fn character_invariants() {
        for d in [1u64, 2, 4, 8, 12, 15, 16, 24, 45] {
            for chi in build_characters(d) {
                let v = chi.values();
                assert!((v[(1 % d) as usize] - 1.0).norm() < 1e-12);
                for a in 0..d {
                    let coprime = gcd(a as i64, d as i64) == 1;
                    assert_eq!(v[a as usize].norm() > 0.5, coprime);
                    if coprime {
                        assert!((v[a as usize].norm() - 1.0).abs() < 1e-12);
                    }
                    for b in 0..d {
                        let ab = (a * b % d) as usize;
                        assert!((v[ab] - v[a as usize] * v[b as usize]).norm() < 1e-12);
                    }
                }
                assert!((chi.value(-1).re - chi.parity() as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn enumeration_is_indexed_and_conjugation_closes() {
        for d in [5u64, 7, 8, 12, 16] {
            let all = build_characters(d);
            for (i, chi) in all.iter().enumerate() {
                assert_eq!(chi.index(), i);
                let cj = chi.conjugate();
                for x in 0..d as i64 {
                    assert!((cj.value(x) - chi.value(x).conj()).norm() < 1e-12);
                }
                let back = DirichletCharacter::from_values(chi.values()).unwrap();
                assert_eq!(back.index(), i);
            }
            assert!(all[0].is_trivial());
        }
    }

    #[test]
    fn primitive_counts_match_formula() {
        // Number of primitive characters mod D is multiplicative with
        // p -> p - 2 and p^a -> p^{a-2}(p-1)^2 for a >= 2.
        for d in 2..=60u64 {
            let want: u64 = factorize(d)
                .iter()
                .map(|&(p, a)| if a == 1 { p - 2 } else { p.pow(a - 2) * (p - 1) * (p - 1) })
                .product();
            let got = build_characters(d).iter().filter(|c| c.is_primitive()).count() as u64;
            assert_eq!(got, want, "D = {d}");
        }
    }

    #[test]
    fn kloosterman_examples() {
        assert!((kloosterman(1, 1, 2) - 1.0).abs() < 1e-12);
        assert!((kloosterman(1, 1, 3) + 1.0).abs() < 1e-12);
        for c in 1..=50u64 {
            assert!((kloosterman(0, 1, c) - moebius(c) as f64).abs() < 1e-9);
        }
        assert!(kloosterman(2, 1, 4).abs() < 1e-12);
    }

    #[test]
    fn twisted_examples() {
        let triv = DirichletCharacter::trivial(1);
        let s = twisted_kloosterman(&triv, 1, 1, 3).unwrap();
        assert!((s.re - kloosterman(1, 1, 3)).abs() < 1e-12 && s.im.abs() < 1e-12);
        let chi = real_char_mod5();
        assert!(twisted_kloosterman(&chi, 1, 1, 12).is_err());
        let (l, r) = check_twisted_multiplicativity(&chi, 1, 1, 2).unwrap();
        assert!((l - r).norm() < 1e-10);
        assert!((l.re + 5f64.sqrt()).abs() < 1e-10 && l.im.abs() < 1e-10);
        let (l, r) = check_twisted_multiplicativity(&chi, 5, 1, 3).unwrap();
        assert!((l - r).norm() < 1e-10);
    }

    #[test]
    fn kernel_matches_direct_sums() {
        let chi = character(8, 3).unwrap();
        let k = KloostermanKernel::new(24, Some(&chi)).unwrap();
        for m in -5..6 {
            for n in 0..7 {
                let d = twisted_kloosterman(&chi, m, n, 24).unwrap();
                assert!((k.sum(m, n) - d).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn gauss_and_ramanujan_examples() {
        assert!((gauss_sum(&DirichletCharacter::trivial(1)) - 1.0).norm() < 1e-15);
        assert!((gauss_sum(&real_char_mod5()) - 1.0).norm() < 1e-12);
        assert_eq!(ramanujan_sum(1), 1);
        assert_eq!(ramanujan_sum(5), -1);
        assert_eq!(ramanujan_sum(4), 0);
    }

    #[test]
    fn level_split_examples() {
        assert_eq!(level_split(12, 6), LevelSplit { ell: 12, ell0: 12, ell_prime: 1 });
        assert_eq!(level_split(7, 5), LevelSplit { ell: 7, ell0: 1, ell_prime: 7 });
        assert_eq!(level_split(10, 4), LevelSplit { ell: 10, ell0: 2, ell_prime: 5 });
    }

    #[test]
    fn vanishing_examples() {
        let triv = DirichletCharacter::trivial(1);
        assert!(check_vanishing(&triv, 2, 1, 4).unwrap());
        assert!(!check_vanishing(&triv, 1, 1, 4).unwrap());
        let chi = real_char_mod5();
        assert!(check_vanishing(&chi, 1, 1, 4).is_err());
        // Primitive character mod 4: the p-part of the conductor is all of c.
        let chi4 = character(4, 1).unwrap();
        assert!(chi4.is_primitive() && vanishing_hypothesis(2, 1, 4));
        assert!(!vanishing_applies(&chi4, 2, 1, 4));
        assert!((twisted_kloosterman(&chi4, 2, 1, 4).unwrap() - C64::new(0.0, -2.0)).norm() < 1e-14);
        assert!(check_vanishing(&chi4, 2, 1, 8).unwrap());
    }
}
