//! The averaged Voronoi formula.
//!
//! The spectral form pairs `sum_f omega_f conj(a_f(ell)) sum_n a_f(n) g(n)`
//! with a dual sum against the Hankel transform of `g`. Independently of any
//! coefficient data, the same identity is evaluated as two geometric
//! expansions: the Poisson-summed Petersson series (dual frequencies `m`
//! against `g J e(-my/q)`), and the dual Petersson series over
//! `S_chi(ell_0 D n, ell'; cD)` weighted by `(H_k g)(n/D)`.

use std::f64::consts::{PI, TAU};

use std::cell::RefCell;

use rustfft::FftPlanner;

use crate::arith::{self, DirichletCharacter, LevelSplit};
use crate::error::{precondition, Error, Result};
use crate::forms::HarmonicBasis;
use crate::specfun::bessel_j_unchecked;
use crate::traceformula::power_tail;
use crate::transforms::{spectral_cutoff, HankelTable, QuadratureConfig, TestFunction};
use crate::{e, e_frac, i_pow, ordered_map, C64};

/// Truncation controls for the Voronoi and continuation series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoronoiTruncation {
    /// Moduli `cD` with `c <= cmax` are summed first (or only, if not adaptive).
    pub cmax: u64,
    /// Hard cap for adaptive doubling of `cmax` and for per-`n` cutoffs.
    pub cmax_cap: u64,
    /// Optional cap on `|m|`; by default the cutoff follows the spectral
    /// width of the amplitude.
    pub mmax: Option<u64>,
    /// Optional fixed length of dual `n`-sums; by default chosen from the
    /// decay of the Hankel transform.
    pub nmax: Option<u64>,
    /// Absolute accuracy goal.
    pub target: f64,
    /// Double `cmax` until the last doubling changes the value by less
    /// than `target / 10`.
    pub adaptive: bool,
}

impl Default for VoronoiTruncation {
    fn default() -> Self {
        VoronoiTruncation {
            cmax: 32,
            cmax_cap: 8192,
            mmax: None,
            nmax: None,
            target: 1e-6,
            adaptive: true,
        }
    }
}

impl VoronoiTruncation {
    pub fn with_target(mut self, target: f64) -> Self {
        self.target = target;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.cmax == 0 || self.cmax_cap < self.cmax || !(self.target > 0.0) {
            return precondition("truncation needs 0 < cmax <= cmax_cap and target > 0");
        }
        if self.mmax == Some(0) || self.nmax == Some(0) {
            return precondition("mmax and nmax caps must be positive");
        }
        Ok(())
    }
}

/// A truncated geometric or spectral evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoronoiReport {
    pub value: C64,
    /// Largest `c` (modulus `cD`) that contributed.
    pub cmax: u64,
    /// Length of the dual `n`-sum, 0 where not applicable.
    pub nmax: u64,
    /// Size of the last adaptive increment.
    pub last_change: f64,
    /// Estimated error from quadrature and the neglected ranges.
    pub error_estimate: f64,
    /// False when a cap stopped the refinement early.
    pub converged: bool,
}

/// Which closed form of the dual side applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FinalVariant {
    /// `D > 1`, primitive character.
    Primitive,
    /// `D > 1` square-free, trivial character.
    TrivialSquarefree,
    /// `D = 1`.
    LevelOne,
}

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

/// Classifies `(D, chi)` for the dual side.
pub fn final_variant(d: u64, chi: &DirichletCharacter) -> Result<FinalVariant> {
    if d == 1 {
        Ok(FinalVariant::LevelOne)
    } else if chi.is_primitive() {
        Ok(FinalVariant::Primitive)
    } else if chi.is_trivial() && arith::is_squarefree(d) {
        Ok(FinalVariant::TrivialSquarefree)
    } else {
        Err(Error::Unsupported(format!(
            "dual side needs a primitive character or a trivial one at square-free level; got index {} mod {d}",
            chi.index()
        )))
    }
}

/// Constant in front of the dual sum:
/// `i^k chi(-1) conj(chi(ell')) eps_chi / sqrt D`, `mu(D) i^k`, or `i^k`.
pub fn dual_prefactor(k: u32, d: u64, chi: &DirichletCharacter, split: &LevelSplit) -> Result<C64> {
    let ik = i_pow(k as i64);
    Ok(match final_variant(d, chi)? {
        FinalVariant::LevelOne => ik,
        FinalVariant::TrivialSquarefree => ik * arith::moebius(d) as f64,
        FinalVariant::Primitive => {
            ik * chi.parity() as f64 * chi.conj_value(split.ell_prime as i64) * arith::gauss_sum(chi) / (d as f64).sqrt()
        }
    })
}

// ---------------------------------------------------------------------------
// Dual-frequency engine shared with the continuation

/// Per-thread FFT planner whose plan cache is dropped once the planned
/// lengths add up to `PLAN_BUDGET`, which bounds its twiddle storage.
struct PlanCache {
    planner: FftPlanner<f64>,
    lengths: std::collections::HashSet<usize>,
    total: usize,
}

const PLAN_BUDGET: usize = 1 << 22;

impl PlanCache {
    /// Drops the cached plans if `len` would push them past the budget.
    fn reserve(&mut self, len: usize) {
        if self.lengths.insert(len) {
            self.total += len;
            if self.total > PLAN_BUDGET {
                self.planner = FftPlanner::new();
                self.lengths.clear();
                self.lengths.insert(len);
                self.total = len;
            }
        }
    }

    fn forward(&mut self, len: usize) -> std::sync::Arc<dyn rustfft::Fft<f64>> {
        self.reserve(len);
        self.planner.plan_fft_forward(len)
    }

    fn inverse(&mut self, len: usize) -> std::sync::Arc<dyn rustfft::Fft<f64>> {
        self.reserve(len);
        self.planner.plan_fft_inverse(len)
    }
}

thread_local! {
    static PLANNER: RefCell<PlanCache> = RefCell::new(PlanCache {
        planner: FftPlanner::new(),
        lengths: Default::default(),
        total: 0,
    });
}

/// Smallest `2^a 3^b 5^c 7^d >= n`, so FFT lengths stay fast.
fn smooth_size(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5, 7] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// `sum_c (X/q) sum_{(m, q) = 1} conj(chi(m)) e(-ell mbar/q)
///      int A(y) J_{k-1}(4 pi sqrt(ell X y)/q) e(-m X y/q) dy`, `q = cD`.
///
/// For one modulus all `m` come from a single FFT: on the grid
/// `y_i = a + i h` with `h X / q = 1/L`, `e(-m X y_i / q)` factors as
/// `e(-m X a/q) e(-m i / L)`, so folding the samples mod `L` and one
/// transform give every `I_m` with `|m| < L/2`. The spacing keeps `1/h`
/// above twice the amplitude bandwidth, which makes the trapezoid sums
/// spectrally accurate; beyond that bandwidth `I_m` is negligible and
/// dropped.
pub(crate) struct DualFrequencySum<'a, A: Fn(f64) -> C64 + Sync> {
    pub nu: u32,
    pub d: u64,
    pub chi: &'a DirichletCharacter,
    pub ell: u64,
    pub x: f64,
    pub a: f64,
    pub b: f64,
    pub amp: A,
    /// Spectral cutoff of `amp` in cycles per unit.
    pub xi: f64,
    pub mmax: Option<u64>,
}

impl<'a, A: Fn(f64) -> C64 + Sync> DualFrequencySum<'a, A> {
    /// Contribution of the modulus `q = cD`.
    ///
    /// Once the frequency range covers complete residue systems mod `q` the
    /// term is summed over integers instead, see [`Self::term_by_integers`].
    pub fn term(&self, c: u64) -> C64 {
        let q = c * self.d;
        let (_, m_top) = self.frequency_range(q);
        if self.mmax.is_none() && m_top >= q {
            self.term_by_integers(q)
        } else {
            self.term_by_frequencies(q)
        }
    }

    /// `(vmax, m_top)`: the bandwidth of `A(y) J(...)` and the largest `|m|` kept.
    fn frequency_range(&self, q: u64) -> (f64, u64) {
        let qf = q as f64;
        let scale = self.x / qf;
        let bessel_freq = (self.ell as f64 * self.x).sqrt() / (qf * self.a.sqrt());
        let vmax = self.xi + bessel_freq;
        let mut m_top = (vmax / scale).floor() as u64;
        if let Some(cap) = self.mmax {
            m_top = m_top.min(cap);
        }
        (vmax, m_top)
    }

    /// The term through Poisson summation in reverse:
    /// `sum_m conj(chi(m)) e(-ell mbar/q) I_m = chi(-1) sum_n h(n) S_chi(ell, n; q)`
    /// with `h(t) = A(t/X) J_{k-1}(4 pi sqrt(ell t)/q)`, summed over the
    /// integers `n` with `n/X` inside the support. The Kloosterman sums for
    /// all `n` come from one inverse FFT of length `q` when that is cheaper.
    pub fn term_by_integers(&self, q: u64) -> C64 {
        let qf = q as f64;
        let ns: Vec<u64> = ((self.a * self.x).floor().max(0.0) as u64..=(self.b * self.x).ceil() as u64)
            .filter(|&n| {
                let y = n as f64 / self.x;
                n > 0 && y > self.a && y < self.b
            })
            .collect();
        if ns.is_empty() {
            return C64::new(0.0, 0.0);
        }
        let units = arith::units_with_inverses(q);
        let phases = arith::phase_table(q);
        let ell_q = (self.ell % q) as u128;
        let weights: Vec<C64> = units
            .iter()
            .map(|&(x, xb)| self.chi.conj_value(x as i64) * phases[((ell_q * xb as u128) % q as u128) as usize])
            .collect();
        let direct_cost = ns.len() as f64 * units.len() as f64;
        let fft_cost = 5.0 * qf * qf.log2().max(1.0);
        let kloosterman: Box<dyn Fn(u64) -> C64> = if direct_cost <= fft_cost {
            Box::new(|n: u64| {
                let nq = (n % q) as u128;
                units
                    .iter()
                    .zip(&weights)
                    .map(|(&(x, _), w)| w * phases[((nq * x as u128) % q as u128) as usize])
                    .sum()
            })
        } else {
            let mut buf = vec![C64::new(0.0, 0.0); q as usize];
            for (&(x, _), w) in units.iter().zip(&weights) {
                buf[x as usize] += w;
            }
            let fft = PLANNER.with(|p| p.borrow_mut().inverse(q as usize));
            fft.process(&mut buf);
            Box::new(move |n: u64| buf[(n % q) as usize])
        };
        let beta = 4.0 * PI * (self.ell as f64).sqrt() / qf;
        let total: C64 = ns
            .iter()
            .map(|&n| {
                let amp = (self.amp)(n as f64 / self.x);
                amp * bessel_j_unchecked(self.nu, beta * (n as f64).sqrt()) * kloosterman(n)
            })
            .sum();
        total * (self.chi.parity() as f64 / qf)
    }

    /// The term from the dual frequencies `|m| <= m_top` (see the type docs).
    pub fn term_by_frequencies(&self, q: u64) -> C64 {
        let qf = q as f64;
        let scale = self.x / qf;
        let lx = self.ell as f64 * self.x;
        let (vmax, m_top) = self.frequency_range(q);
        let beta = 4.0 * PI * lx.sqrt() / qf;
        if m_top == 0 {
            if q != 1 {
                return C64::new(0.0, 0.0);
            }
            // Zero frequency alone: a plain trapezoid sum resolving `vmax`.
            let n = (((self.b - self.a) * (2.0 * vmax + 1.0)).ceil() as usize).max(16);
            let h = (self.b - self.a) / n as f64;
            let sum: C64 = (1..n)
                .map(|i| {
                    let y = self.a + i as f64 * h;
                    (self.amp)(y) * bessel_j_unchecked(self.nu, beta * y.sqrt())
                })
                .sum();
            return sum * (h * scale);
        }
        let len = smooth_size((((2.0 * vmax + 1.0) / scale).ceil() as usize).max(2 * m_top as usize + 2));
        let h = 1.0 / (len as f64 * scale);
        let mut buf = vec![C64::new(0.0, 0.0); len];
        let mut i = 1usize;
        loop {
            let y = self.a + i as f64 * h;
            if y >= self.b {
                break;
            }
            buf[i % len] += (self.amp)(y) * (bessel_j_unchecked(self.nu, beta * y.sqrt()) * h);
            i += 1;
        }
        let fft = PLANNER.with(|p| p.borrow_mut().forward(len));
        fft.process(&mut buf);
        let at = |m: i64| -> C64 { e(-(m as f64) * scale * self.a) * buf[m.rem_euclid(len as i64) as usize] };

        let mut total = C64::new(0.0, 0.0);
        if q == 1 {
            // Only modulus 1 admits the zero frequency.
            total += at(0);
        }
        let table = m_top >= q;
        let (inverses, phases) = if table {
            let mut inv = vec![0u64; q as usize];
            for (x, xb) in arith::units_with_inverses(q) {
                inv[x as usize] = xb;
            }
            (inv, arith::phase_table(q))
        } else {
            (Vec::new(), Vec::new())
        };
        let ell_q = (self.ell % q) as u128;
        for m in 1..=m_top {
            if arith::gcd(m as i64, q as i64) != 1 {
                continue;
            }
            // ph_minus = e(ell mbar / q); the +m term carries its conjugate.
            let ph_minus = if table {
                let mb = inverses[(m % q) as usize];
                phases[((ell_q * mb as u128) % q as u128) as usize]
            } else {
                let mb = arith::mod_inverse(m as i64, q).unwrap_or(0);
                e_frac(((ell_q * mb as u128) % q as u128) as i64, q)
            };
            let mi = m as i64;
            total += self.chi.conj_value(mi) * ph_minus.conj() * at(mi);
            total += self.chi.conj_value(-mi) * ph_minus * at(-mi);
        }
        total * scale
    }

    /// Smallest `c` whose modulus carries a nonzero frequency. Below it the
    /// phase `e(-m X y/q)` oscillates faster than the amplitude bandwidth for
    /// every `m != 0`, so those terms vanish to working accuracy.
    pub fn first_active(&self) -> u64 {
        let reach = self.x - (self.ell as f64 * self.x / self.a).sqrt();
        let q0 = if self.xi > 0.0 { reach / self.xi } else { f64::INFINITY };
        let c0 = (q0 / self.d as f64).ceil();
        if c0.is_finite() {
            (c0 as u64).max(1)
        } else {
            u64::MAX
        }
    }

    /// `sum_{c0 <= c <= c1}` of [`Self::term`], reduced in `c` order.
    pub fn block(&self, c0: u64, c1: u64) -> C64 {
        if c1 < c0 {
            return C64::new(0.0, 0.0);
        }
        ordered_map((c1 - c0 + 1) as usize, |i| self.term(c0 + i as u64)).into_iter().sum()
    }

    /// Doubling in `c` from `trunc.cmax` until an increment (times `weight`)
    /// drops below `trunc.target / 10`. Returns `(sum, cmax, last change, converged)`.
    pub fn adaptive(&self, trunc: &VoronoiTruncation, weight: f64) -> (C64, u64, f64, bool) {
        let first = self.first_active();
        if first > trunc.cmax_cap {
            return (self.block(1, 1), 1, 0.0, true);
        }
        let mut c = trunc.cmax.max(first.saturating_mul(2)).min(trunc.cmax_cap);
        let mut total = self.block(first.min(c), c) + if first > 1 { self.term(1) } else { C64::new(0.0, 0.0) };
        if !trunc.adaptive {
            return (total, c, 0.0, true);
        }
        let mut change = f64::INFINITY;
        loop {
            if c >= trunc.cmax_cap {
                return (total, c, change, false);
            }
            let next = (2 * c).min(trunc.cmax_cap);
            let inc = self.block(c + 1, next);
            total += inc;
            c = next;
            change = inc.norm() * weight;
            if change < 0.1 * trunc.target {
                return (total, c, change, true);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Geometric sides

/// The Poisson-summed expansion:
/// `g(ell) + 2 pi i^{-k} chi(-1) sum_{c} sum_{m != 0, (m, cD) = 1}
///   conj(chi(m))/(cD) e(-ell mbar/(cD)) int g(y) J_{k-1}(4 pi sqrt(ell y)/(cD)) e(-m y/(cD)) dy`.
///
/// At `D = 1` the modulus `c = 1` also admits `m = 0`; that term is the dual
/// zeroth frequency `i^{-k} (H_k g)(ell)` of the level-one formula.
pub fn voronoi_geometric_initial<G: TestFunction + ?Sized>(
    k: u32,
    d: u64,
    chi: &DirichletCharacter,
    ell: u64,
    g: &G,
    trunc: &VoronoiTruncation,
    cfg: &QuadratureConfig,
) -> Result<VoronoiReport> {
    check_space(k, d, chi, ell)?;
    trunc.validate()?;
    cfg.validate()?;
    let (a, b) = g.support();
    let amp = |y: f64| C64::new(g.eval(y), 0.0);
    let xi = spectral_cutoff(a, b, amp, trunc.target * 1e-3);
    let engine = DualFrequencySum { nu: k - 1, d, chi, ell, x: 1.0, a, b, amp, xi, mmax: trunc.mmax };
    let pref = i_pow(-(k as i64)) * TAU * chi.parity() as f64;
    let (sum, cmax, last_change, converged) = engine.adaptive(trunc, TAU);
    let value = pref * sum + g.eval(ell as f64);
    Ok(VoronoiReport {
        value,
        cmax,
        nmax: 0,
        last_change,
        error_estimate: last_change + trunc.target * 1e-3,
        converged,
    })
}

/// `(H_k g)(n/D)` for `n = 1, 2, ...` until a whole block stays below `eps`
/// (or exactly `nmax` values when given). Returns the values and the
/// largest quadrature error.
fn hankel_dual_values<G: TestFunction + ?Sized>(
    k: u32,
    g: &G,
    d: u64,
    eps: f64,
    nmax: Option<u64>,
    cap: u64,
    cfg: &QuadratureConfig,
) -> Result<(Vec<f64>, f64)> {
    let inner = cfg.with_target(cfg.target_abs_error.min(eps));
    if let Some(n) = nmax {
        let args: Vec<f64> = (1..=n).map(|j| j as f64 / d as f64).collect();
        let t = HankelTable::new(k, g, &args, &inner)?;
        return Ok((t.values, t.max_error));
    }
    let (_, hi) = g.support();
    let block = (8 * d).max(64);
    let mut values = Vec::new();
    let mut err = 0.0f64;
    loop {
        let start = values.len() as u64 + 1;
        let args: Vec<f64> = (start..start + block).map(|j| j as f64 / d as f64).collect();
        let t = HankelTable::new(k, g, &args, &inner)?;
        err = err.max(t.max_error);
        let quiet = t.values.iter().all(|v| v.abs() < eps);
        values.extend(t.values);
        let past_support = values.len() as f64 / d as f64 > hi;
        if (quiet && past_support) || values.len() as u64 >= cap {
            break;
        }
    }
    // Drop the trailing negligible values.
    while values.len() > 1 && values.last().is_some_and(|v| v.abs() < eps) {
        values.pop();
    }
    Ok((values, err))
}

/// Kloosterman sums `S_chi(ell_0 D n, ell'; cD)` for all `n` at once: with
/// `W[z] = sum_{x: xbar = z mod c} conj(chi(x)) e(ell' x/(cD))`, the sum is
/// `sum_z W[z] e(ell_0 n z / c)`, a length-`c` DFT of `W`.
fn dual_kloosterman_table(c: u64, d: u64, chi: &DirichletCharacter, ell_prime: u64, planner: &mut FftPlanner<f64>) -> Vec<C64> {
    let q = c * d;
    let mut w = vec![C64::new(0.0, 0.0); c as usize];
    let phases = arith::phase_table(q);
    for (x, xb) in arith::units_with_inverses(q) {
        let ph = phases[((ell_prime as u128 * x as u128) % q as u128) as usize];
        w[(xb % c) as usize] += chi.conj_value(x as i64) * ph;
    }
    planner.plan_fft_inverse(c as usize).process(&mut w);
    w
}

/// The dual Petersson expansion:
/// `P sum_{n} (H_k g)(n/D) [delta(ell_0 D n = ell') + 2 pi i^{-k} sum_c
///   S_chi(ell_0 D n, ell'; cD)/(cD) J_{k-1}(4 pi sqrt(ell n D)/(cD))]`
/// with `P` from [`dual_prefactor`].
///
/// Each `n` gets its own `c` cutoff: the Weil-Bessel majorant of the
/// omitted moduli times `|(H_k g)(n/D)|` is kept below
/// `target / (100 sqrt(nmax))`.
pub fn voronoi_geometric_final<G: TestFunction + ?Sized>(
    k: u32,
    d: u64,
    chi: &DirichletCharacter,
    ell: u64,
    g: &G,
    trunc: &VoronoiTruncation,
    cfg: &QuadratureConfig,
) -> Result<VoronoiReport> {
    check_space(k, d, chi, ell)?;
    trunc.validate()?;
    cfg.validate()?;
    let split = arith::level_split(ell, d);
    let pref = dual_prefactor(k, d, chi, &split)?;
    let eps_h = trunc.target * 1e-4;
    let (hv, h_err) = hankel_dual_values(k, g, d, eps_h, trunc.nmax, 2_000_000, cfg)?;
    let nmax = hv.len();
    let nu = (k - 1) as f64;
    let cond = chi.conductor() as f64;
    let eps_n = 0.01 * trunc.target / (nmax as f64).sqrt();
    let mut converged = true;
    let cutoffs: Vec<u64> = (0..nmax)
        .map(|i| {
            let n = (i + 1) as u64;
            if !trunc.adaptive {
                return trunc.cmax;
            }
            let hn = hv[i].abs();
            if hn == 0.0 {
                return 0;
            }
            let g_q = arith::gcd(n as i64, split.ell_prime as i64) as f64 * cond;
            let r = TAU * ((ell * n * d) as f64).sqrt();
            let mut c = 8u64;
            while c < trunc.cmax_cap && hn * power_tail(nu, d as f64, g_q, r, c as f64) > eps_n {
                c *= 2;
            }
            c.min(trunc.cmax_cap)
        })
        .collect();
    if trunc.adaptive {
        let hit_cap = cutoffs.iter().enumerate().any(|(i, &c)| {
            let n = (i + 1) as u64;
            let g_q = arith::gcd(n as i64, split.ell_prime as i64) as f64 * cond;
            let r = TAU * ((ell * n * d) as f64).sqrt();
            c == trunc.cmax_cap && hv[i].abs() * power_tail(nu, d as f64, g_q, r, c as f64) > eps_n
        });
        converged = !hit_cap;
    }
    let c_top = cutoffs.iter().copied().max().unwrap_or(0);
    let chunk = 16u64;
    let chunks = c_top.div_ceil(chunk) as usize;
    let partials = ordered_map(chunks, |ci| {
        let mut planner = FftPlanner::new();
        let mut acc = vec![C64::new(0.0, 0.0); nmax];
        let c0 = ci as u64 * chunk + 1;
        for c in c0..(c0 + chunk).min(c_top + 1) {
            let q = c * d;
            let t = dual_kloosterman_table(c, d, chi, split.ell_prime, &mut planner);
            for (i, slot) in acc.iter_mut().enumerate() {
                if cutoffs[i] < c {
                    continue;
                }
                let n = (i + 1) as u64;
                let s = t[((split.ell0 as u128 * n as u128) % c as u128) as usize];
                let y = 4.0 * PI * ((ell * n * d) as f64).sqrt() / q as f64;
                *slot += s * (bessel_j_unchecked(k - 1, y) / q as f64);
            }
        }
        acc
    });
    let mut acc = vec![C64::new(0.0, 0.0); nmax];
    for p in partials {
        for (a, v) in acc.iter_mut().zip(p) {
            *a += v;
        }
    }
    let series = i_pow(-(k as i64)) * TAU;
    let mut total = C64::new(0.0, 0.0);
    let mut p_abs = 0.0;
    for (i, &h) in hv.iter().enumerate() {
        let n = (i + 1) as u64;
        let delta = if split.ell0 * d * n == split.ell_prime { 1.0 } else { 0.0 };
        let p = series * acc[i] + delta;
        p_abs += p.norm();
        total += p * h;
    }
    Ok(VoronoiReport {
        value: pref * total,
        cmax: c_top,
        nmax: nmax as u64,
        last_change: 0.0,
        error_estimate: h_err * p_abs + eps_n * (nmax as f64).sqrt() + eps_h,
        converged,
    })
}

// ---------------------------------------------------------------------------
// Spectral sides

/// `sum_f omega_f conj(a_f(ell)) sum_n a_f(n) g(n)`.
pub fn voronoi_spectral_lhs<G: TestFunction + ?Sized>(basis: &HarmonicBasis, ell: u64, g: &G) -> Result<C64> {
    let (a, b) = g.support();
    let n0 = (a.floor() as u64).max(1);
    let n1 = b.ceil() as u64;
    let mut total = C64::new(0.0, 0.0);
    for f in &basis.forms {
        let mut inner = C64::new(0.0, 0.0);
        for n in n0..=n1 {
            let gn = g.eval(n as f64);
            if gn != 0.0 {
                inner += f.a(n)? * gn;
            }
        }
        total += f.omega()? * f.a(ell)?.conj() * inner;
    }
    Ok(total)
}

/// `P sum_f omega_f a_f(ell') sum_{n <= nmax} conj(a_f(ell_0 D n)) (H_k g)(n/D)`,
/// with `P` from [`dual_prefactor`]; `nmax` follows the Hankel decay unless
/// fixed by `trunc.nmax`.
pub fn voronoi_spectral_rhs<G: TestFunction + ?Sized>(
    basis: &HarmonicBasis,
    ell: u64,
    g: &G,
    trunc: &VoronoiTruncation,
    cfg: &QuadratureConfig,
) -> Result<VoronoiReport> {
    trunc.validate()?;
    let (Some(k), Some(d), Some(chi)) = (basis.weight(), basis.level(), basis.character()) else {
        return Ok(VoronoiReport {
            value: C64::new(0.0, 0.0),
            cmax: 0,
            nmax: 0,
            last_change: 0.0,
            error_estimate: 0.0,
            converged: true,
        });
    };
    check_space(k, d, chi, ell)?;
    let split = arith::level_split(ell, d);
    let pref = dual_prefactor(k, d, chi, &split)?;
    let eps_h = trunc.target * 1e-3;
    let (hv, h_err) = hankel_dual_values(k, g, d, eps_h, trunc.nmax, 2_000_000, cfg)?;
    let nmax = hv.len() as u64;
    let step = split.ell0 * d;
    let mut total = C64::new(0.0, 0.0);
    let mut coeff_abs = 0.0;
    for f in &basis.forms {
        f.a(step * nmax)?;
        let mut inner = C64::new(0.0, 0.0);
        for (i, &h) in hv.iter().enumerate() {
            let a = f.a(step * (i as u64 + 1))?;
            coeff_abs += a.norm();
            inner += a.conj() * h;
        }
        total += f.omega()? * f.a(split.ell_prime)? * inner;
    }
    Ok(VoronoiReport {
        value: pref * total,
        cmax: 0,
        nmax,
        last_change: 0.0,
        error_estimate: h_err * coeff_abs + eps_h,
        converged: true,
    })
}

// ---------------------------------------------------------------------------
// Verification

/// Outcome of a Voronoi comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoronoiCheck {
    pub residual: f64,
    pub budget: f64,
    pub lhs: VoronoiReport,
    pub rhs: VoronoiReport,
}

impl VoronoiCheck {
    pub fn passed(&self) -> bool {
        self.residual <= self.budget && self.lhs.converged && self.rhs.converged
    }
}

/// `|initial - final|` for the data-free geometric identity; the budget is
/// `trunc.target`.
pub fn verify_voronoi_geometric<G: TestFunction + ?Sized>(
    k: u32,
    d: u64,
    chi: &DirichletCharacter,
    ell: u64,
    g: &G,
    trunc: &VoronoiTruncation,
    cfg: &QuadratureConfig,
) -> Result<VoronoiCheck> {
    let lhs = voronoi_geometric_initial(k, d, chi, ell, g, trunc, cfg)?;
    let rhs = voronoi_geometric_final(k, d, chi, ell, g, trunc, cfg)?;
    Ok(VoronoiCheck { residual: (lhs.value - rhs.value).norm(), budget: trunc.target, lhs, rhs })
}

/// `|lhs - rhs|` for the spectral identity on a full basis.
pub fn verify_voronoi_spectral<G: TestFunction + ?Sized>(
    basis: &HarmonicBasis,
    ell: u64,
    g: &G,
    trunc: &VoronoiTruncation,
    cfg: &QuadratureConfig,
) -> Result<VoronoiCheck> {
    let lhs_value = voronoi_spectral_lhs(basis, ell, g)?;
    let rhs = voronoi_spectral_rhs(basis, ell, g, trunc, cfg)?;
    let lhs = VoronoiReport {
        value: lhs_value,
        cmax: 0,
        nmax: 0,
        last_change: 0.0,
        error_estimate: 0.0,
        converged: true,
    };
    Ok(VoronoiCheck { residual: (lhs_value - rhs.value).norm(), budget: trunc.target, lhs, rhs })
}

/// The level-one dual zeroth frequency grouped two ways: as the `m = 0`
/// term `i^{-k} (H_k g)(ell)` of the initial expansion, and as the diagonal
/// `n = ell` of the dual Petersson sum, `i^k (H_k g)(ell) delta(n = ell)`.
/// They coincide for even `k`.
pub fn level_one_zeroth_frequency<G: TestFunction + ?Sized>(
    k: u32,
    g: &G,
    ell: u64,
    cfg: &QuadratureConfig,
) -> Result<(C64, C64)> {
    if k % 2 == 1 {
        return precondition("level one needs even weight");
    }
    let h = crate::transforms::hankel(k, g, ell as f64, cfg)?;
    Ok((i_pow(-(k as i64)) * h, i_pow(k as i64) * h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::character;
    use crate::transforms::canonical_bump;

    #[test]
    fn smooth_sizes() {
        assert_eq!(smooth_size(1), 1);
        assert_eq!(smooth_size(11), 12);
        assert_eq!(smooth_size(97), 98);
        assert_eq!(smooth_size(121), 125);
    }

    #[test]
    fn variants_and_prefactors() {
        assert_eq!(final_variant(1, &DirichletCharacter::trivial(1)).unwrap(), FinalVariant::LevelOne);
        assert_eq!(final_variant(6, &DirichletCharacter::trivial(6)).unwrap(), FinalVariant::TrivialSquarefree);
        assert!(final_variant(4, &DirichletCharacter::trivial(4)).is_err());
        let chi = character(5, 2).unwrap();
        assert_eq!(final_variant(5, &chi).unwrap(), FinalVariant::Primitive);
        let p = dual_prefactor(6, 5, &chi, &arith::level_split(1, 5)).unwrap();
        assert!((p.norm() - 1.0 / 5f64.sqrt()).abs() < 1e-14);
        let t = dual_prefactor(6, 5, &DirichletCharacter::trivial(5), &arith::level_split(1, 5)).unwrap();
        assert!((t - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    /// Direct evaluation of one modulus of the initial expansion without the
    /// FFT: explicit m loop with Gauss-Legendre integrals.
    fn direct_term(k: u32, d: u64, chi: &DirichletCharacter, ell: u64, g: &crate::transforms::BumpFunction, c: u64, mmax: i64) -> C64 {
        let q = c * d;
        let gl = crate::quadrature::GaussLegendre::new(20);
        let (a, b) = g.support();
        let mut total = C64::new(0.0, 0.0);
        for m in -mmax..=mmax {
            if arith::gcd(m, q as i64) != 1 {
                continue;
            }
            let mb = arith::mod_inverse(m, q).unwrap() as i64;
            let w = chi.conj_value(m) * e_frac(-(ell as i64) * mb, q);
            let integral = gl.integrate_c(a, b, 200, |y| {
                let j = bessel_j_unchecked(k - 1, 4.0 * PI * ((ell as f64) * y).sqrt() / q as f64);
                e(-(m as f64) * y / q as f64) * g.eval(y) * j
            });
            total += w * integral;
        }
        total / q as f64
    }

    #[test]
    fn fft_term_matches_direct_sum() {
        let g = canonical_bump(1.0, 4.0).unwrap();
        let chi = character(5, 2).unwrap();
        let amp = |y: f64| C64::new(g.eval(y), 0.0);
        let xi = spectral_cutoff(1.0, 4.0, amp, 1e-12);
        let engine = DualFrequencySum { nu: 5, d: 5, chi: &chi, ell: 2, x: 1.0, a: 1.0, b: 4.0, amp, xi, mmax: None };
        for c in [1u64, 2, 3] {
            let mtop = ((xi + 1.0) * (c * 5) as f64) as i64 + 2;
            let direct = direct_term(6, 5, &chi, 2, &g, c, mtop);
            let fast = engine.term_by_frequencies(c * 5);
            assert!((direct - fast).norm() < 1e-10, "c = {c}: {direct} vs {fast}");
        }
    }

    #[test]
    fn integer_and_frequency_paths_agree() {
        // Complex character of order 4, odd, so weight 5.
        let chi = character(5, 1).unwrap();
        assert!(chi.values().iter().any(|v| v.im.abs() > 0.5));
        let g = canonical_bump(1.0, 4.0).unwrap();
        let amp = |y: f64| C64::new(g.eval(y), 0.0) * C64::new(0.0, -0.3 * y.ln()).exp();
        let xi = spectral_cutoff(1.0, 4.0, amp, 1e-13);
        for (x, ell) in [(1.0, 1u64), (1.0, 3), (6.5, 2), (40.0, 1)] {
            let engine = DualFrequencySum { nu: 4, d: 5, chi: &chi, ell, x, a: 1.0, b: 4.0, amp, xi, mmax: None };
            for c in [1u64, 2, 3, 7] {
                let q = 5 * c;
                let by_freq = engine.term_by_frequencies(q);
                let by_int = engine.term_by_integers(q);
                assert!((by_freq - by_int).norm() < 1e-11, "x = {x}, ell = {ell}, c = {c}: {by_freq} vs {by_int}");
            }
        }
    }

    #[test]
    fn dual_table_matches_kloosterman() {
        let chi = character(7, 1).unwrap();
        let mut planner = FftPlanner::new();
        for c in [1u64, 2, 6] {
            let t = dual_kloosterman_table(c, 7, &chi, 3, &mut planner);
            for n in 1..10u64 {
                let direct = arith::twisted_kloosterman(&chi, (7 * 2 * n) as i64, 3, c * 7).unwrap();
                assert!((t[((2 * n) % c) as usize] - direct).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn diagonal_term_vanishes_off_support() {
        let g = canonical_bump(1.0, 2.0).unwrap();
        let chi = character(5, 2).unwrap();
        let fixed = VoronoiTruncation { cmax: 4, adaptive: false, ..Default::default() };
        let cfg = QuadratureConfig::default();
        let r = voronoi_geometric_initial(6, 5, &chi, 7, &g, &fixed, &cfg).unwrap();
        let pref = i_pow(-6) * TAU * chi.parity() as f64;
        let amp = |y: f64| C64::new(g.eval(y), 0.0);
        let xi = spectral_cutoff(1.0, 2.0, amp, fixed.target * 1e-3);
        let engine = DualFrequencySum { nu: 5, d: 5, chi: &chi, ell: 7, x: 1.0, a: 1.0, b: 2.0, amp, xi, mmax: None };
        assert!((r.value - pref * engine.block(1, 4)).norm() < 1e-15);
    }

    #[test]
    fn level_one_groupings_agree() {
        let g = canonical_bump(1.0, 4.0).unwrap();
        let (a, b) = level_one_zeroth_frequency(12, &g, 2, &QuadratureConfig::default()).unwrap();
        assert!((a - b).norm() < 1e-10);
    }
}
