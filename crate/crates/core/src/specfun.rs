//! Special functions: Bessel `J_nu` of integer order, complex log-gamma, the
//! gamma factor `gamma_k(s)` and its reflection ratio, and the Mellin-Barnes
//! representation of `J_{k-1}`.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use crate::error::{precondition, Error, Result};
use crate::quadrature::GaussLegendre;
use crate::C64;

// ---------------------------------------------------------------------------
// Bessel J, real argument

/// Below this argument (or while `x^2 < 4(nu+1)`) the ascending series is used.
const SERIES_MAX: f64 = 5.0;
/// The Hankel expansion is attempted from here on; it falls back to Miller's
/// algorithm whenever it cannot reach full precision.
const ASYMPTOTIC_MIN: f64 = 25.0;
/// Largest admissible term of the Hankel expansion; beyond it the summation
/// loses more than two digits to cancellation.
const ASYMPTOTIC_MAX_TERM: f64 = 1e2;

/// `J_nu(x)` for integer `nu >= 0` and real `x >= 0`.
///
/// Three regimes: the ascending series for small `x`, Miller's backward
/// recurrence normalized by `J_0 + 2 sum J_{2k} = 1` in the middle, and the
/// Hankel asymptotic expansion for large `x`.
pub fn bessel_j(nu: u32, x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return precondition(format!("bessel_j needs a finite argument x >= 0, got {x}"));
    }
    Ok(bessel_j_unchecked(nu, x))
}

/// [`bessel_j`] without argument validation, for hot loops whose arguments
/// are non-negative by construction.
#[inline]
pub fn bessel_j_unchecked(nu: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0 { 1.0 } else { 0.0 };
    }
    let nf = nu as f64;
    if x <= SERIES_MAX || x * x <= 4.0 * (nf + 1.0) {
        return bessel_series(nu, x);
    }
    if x >= ASYMPTOTIC_MIN {
        if let Some(v) = bessel_asymptotic(nu, x) {
            return v;
        }
    }
    bessel_miller(nu, x)
}

/// Ascending series `sum (-1)^j (x/2)^{nu+2j} / (j! (nu+j)!)`.
fn bessel_series(nu: u32, x: f64) -> f64 {
    let h = 0.5 * x;
    let mut t = 1.0;
    for i in 1..=nu {
        t *= h / i as f64;
    }
    let q = -h * h;
    let mut sum = t;
    let mut j = 1u32;
    loop {
        t *= q / (j as f64 * (nu + j) as f64);
        sum += t;
        if t.abs() <= 1e-17 * sum.abs() || t == 0.0 {
            break;
        }
        j += 1;
    }
    sum
}

/// Miller's backward recurrence from an order well past the turning point.
fn bessel_miller(nu: u32, x: f64) -> f64 {
    let top = (nu as f64).max(x) + 40.0 + 4.0 * x.sqrt();
    let mut n = top.ceil() as u32;
    n += n % 2;
    let two_over_x = 2.0 / x;
    let (mut jp1, mut j) = (0.0f64, 1e-30f64);
    let mut norm = 0.0f64;
    let mut result = 0.0f64;
    // j holds J_k (unnormalized), jp1 holds J_{k+1}.
    let mut k = n;
    loop {
        if k % 2 == 0 {
            norm += if k == 0 { j } else { 2.0 * j };
        }
        if k == nu {
            result = j;
        }
        if k == 0 {
            break;
        }
        let jm1 = k as f64 * two_over_x * j - jp1;
        jp1 = j;
        j = jm1;
        k -= 1;
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp1 *= 1e-250;
            norm *= 1e-250;
            result *= 1e-250;
        }
    }
    result / norm
}

/// Hankel expansion `sqrt(2/(pi x)) (P cos w - Q sin w)`, `w = x - (2 nu + 1) pi / 4`.
///
/// Returns `None` if the series starts diverging before reaching full
/// precision, or if its terms grow so large that cancellation costs digits.
fn bessel_asymptotic(nu: u32, x: f64) -> Option<f64> {
    let mu = 4.0 * (nu as f64) * (nu as f64);
    let eight_x = 8.0 * x;
    let (mut p, mut q) = (1.0f64, 0.0f64);
    let mut a = 1.0f64;
    let mut prev = f64::INFINITY;
    let mut hump = 0.0f64;
    let mut converged = false;
    for k in 1..400u32 {
        let odd = (2 * k - 1) as f64;
        a *= (mu - odd * odd) / (k as f64 * eight_x);
        let mag = a.abs();
        hump = hump.max(mag);
        if mag == 0.0 {
            converged = true;
            break;
        }
        match k % 4 {
            1 => q += a,
            2 => p -= a,
            3 => q -= a,
            _ => p += a,
        }
        if mag < 1e-17 * (p.abs() + q.abs()) {
            converged = true;
            break;
        }
        // Past the initial hump the terms must keep shrinking.
        if odd * odd > mu && mag > prev {
            return None;
        }
        prev = mag;
    }
    if !converged || hump > ASYMPTOTIC_MAX_TERM {
        return None;
    }
    // cos/sin of (2 nu + 1) pi / 4 are exact multiples of 1/sqrt(2).
    let (cphi, sphi) = match (2 * nu + 1) % 8 {
        1 => (FRAC_1_SQRT_2, FRAC_1_SQRT_2),
        3 => (-FRAC_1_SQRT_2, FRAC_1_SQRT_2),
        5 => (-FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
        _ => (FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
    };
    let (sx, cx) = x.sin_cos();
    let cw = cx * cphi + sx * sphi;
    let sw = sx * cphi - cx * sphi;
    Some((2.0 / (PI * x)).sqrt() * (p * cw - q * sw))
}

/// `J_nu(z)` for complex `z` by the ascending series.
///
/// Intended for moderate `|z|` (the Weber identity uses `|z| <= 20`); at least
/// 60 terms are summed and the remainder is checked against the last term.
pub fn bessel_j_complex(nu: u32, z: C64) -> Result<C64> {
    if z.norm() > 60.0 {
        return precondition(format!("complex Bessel series limited to |z| <= 60, got {}", z.norm()));
    }
    let h = z * 0.5;
    let mut t = C64::new(1.0, 0.0);
    for i in 1..=nu {
        t *= h / i as f64;
    }
    let q = -h * h;
    let mut sum = t;
    let mut j = 1u32;
    loop {
        t *= q / (j as f64 * (nu + j) as f64);
        sum += t;
        let ratio = q.norm() / ((j + 1) as f64 * (nu + j + 1) as f64);
        if j >= 60 && ratio < 0.5 && t.norm() <= 1e-17 * sum.norm().max(1e-300) {
            break;
        }
        if j > 2000 {
            return Err(Error::NonFinite(format!("Bessel series for z = {z} did not converge")));
        }
        j += 1;
    }
    Ok(sum)
}

// ---------------------------------------------------------------------------
// Complex log-gamma

/// Bernoulli numbers `B_2, B_4, ..., B_20`.
const BERNOULLI: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

/// Principal-sheet-agnostic `log Gamma(z)`: the real part is exact to
/// roughly machine precision, the imaginary part is correct mod `2 pi`.
///
/// Stirling's series with ten Bernoulli corrections after shifting to
/// `|z| >= 15`; the reflection formula handles `Re z < 1/2`. Poles return an
/// infinite real part.
pub fn ln_gamma(z: C64) -> C64 {
    if is_gamma_pole(z) {
        return C64::new(f64::INFINITY, 0.0);
    }
    if z.im < 0.0 {
        return ln_gamma(z.conj()).conj();
    }
    if z.re < 0.5 {
        let one = C64::new(1.0, 0.0);
        return C64::new(PI.ln(), 0.0) - ln_sin_pi(z) - ln_gamma(one - z);
    }
    let mut w = z;
    let mut shift = C64::new(0.0, 0.0);
    while w.norm() < 15.0 {
        shift += w.ln();
        w += 1.0;
    }
    stirling(w) - shift
}

fn stirling(w: C64) -> C64 {
    let half_ln_2pi = 0.5 * TAU.ln();
    let mut s = (w - 0.5) * w.ln() - w + half_ln_2pi;
    let inv = w.inv();
    let inv2 = inv * inv;
    let mut pow = inv;
    for (k, b) in BERNOULLI.iter().enumerate() {
        let n = 2.0 * (k as f64 + 1.0);
        s += pow * (b / (n * (n - 1.0)));
        pow *= inv2;
    }
    s
}

/// `log sin(pi z)` for `Im z >= 0`, written to avoid overflow for large `Im z`.
fn ln_sin_pi(z: C64) -> C64 {
    // sin(pi z) = e^{-i pi z} (1 - e^{2 i pi z}) (i/2)
    let i = C64::new(0.0, 1.0);
    let w = (i * TAU * z).exp();
    -i * PI * z + C64::new(0.5f64.ln(), PI / 2.0) + (C64::new(1.0, 0.0) - w).ln()
}

fn is_gamma_pole(z: C64) -> bool {
    z.im.abs() < 1e-14 && z.re <= 0.0 && (z.re - z.re.round()).abs() < 1e-14
}

// ---------------------------------------------------------------------------
// Gamma factor

/// The archimedean factor `gamma_k(s) = c_k (2 pi)^{-s} Gamma(s + (k-1)/2)`,
/// `c_k = 2^{(3-k)/2} sqrt(pi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaFactor {
    pub weight: u32,
}

impl GammaFactor {
    pub fn new(weight: u32) -> Result<Self> {
        if weight < 2 {
            return precondition(format!("gamma factor needs k >= 2, got {weight}"));
        }
        Ok(GammaFactor { weight })
    }

    fn shift(&self) -> f64 {
        (self.weight as f64 - 1.0) / 2.0
    }

    /// `log gamma_k(s)` from the `c_k (2 pi)^{-s}` form.
    pub fn ln_eval(&self, s: C64) -> Result<C64> {
        let arg = s + self.shift();
        if is_gamma_pole(arg) {
            return Err(Error::NonFinite(format!("gamma_{}({s}) sits on a pole", self.weight)));
        }
        let ln_ck = (3.0 - self.weight as f64) / 2.0 * 2f64.ln() + 0.5 * PI.ln();
        Ok(ln_gamma(arg) - s * TAU.ln() + ln_ck)
    }

    pub fn eval(&self, s: C64) -> Result<C64> {
        finite(self.ln_eval(s)?.exp(), "gamma factor")
    }

    /// The duplication form `pi^{-s} Gamma((s+(k-1)/2)/2) Gamma((s+(k+1)/2)/2)`.
    pub fn eval_duplication(&self, s: C64) -> Result<C64> {
        let a = (s + self.shift()) * 0.5;
        let b = a + 0.5;
        if is_gamma_pole(a) || is_gamma_pole(b) {
            return Err(Error::NonFinite(format!("gamma_{}({s}) sits on a pole", self.weight)));
        }
        finite((ln_gamma(a) + ln_gamma(b) - s * PI.ln()).exp(), "gamma factor")
    }

    /// `gamma_k(1-s) / gamma_k(s)` from a log-gamma difference.
    ///
    /// At `s = 1/2` the two log-gammas are evaluated at the same point, so
    /// the ratio is exactly 1.
    pub fn ratio(&self, s: C64) -> Result<C64> {
        let top = C64::new(1.0 + self.shift(), 0.0) - s;
        let bottom = s + self.shift();
        if is_gamma_pole(top) || is_gamma_pole(bottom) {
            return Err(Error::NonFinite(format!(
                "gamma ratio at s = {s} hits a pole of gamma_{}",
                self.weight
            )));
        }
        let ln = ln_gamma(top) - ln_gamma(bottom) + (s * 2.0 - 1.0) * TAU.ln();
        finite(ln.exp(), "gamma ratio")
    }
}

fn finite(v: C64, what: &str) -> Result<C64> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(format!("{what} overflowed: {v}")))
    }
}

/// `gamma_k(s)`.
pub fn gamma_factor(k: u32, s: C64) -> Result<C64> {
    GammaFactor::new(k)?.eval(s)
}

/// `gamma_k(1-s) / gamma_k(s)`.
pub fn gamma_ratio(k: u32, s: C64) -> Result<C64> {
    GammaFactor::new(k)?.ratio(s)
}

// ---------------------------------------------------------------------------
// Mellin-Barnes

/// Result of [`mellin_barnes_j`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MellinBarnes {
    /// Full contour integral: vertical segment plus the rotated tails.
    pub value: C64,
    /// Contribution of the vertical segment `|Im s| <= tmax` alone.
    pub segment: C64,
    /// Power-law estimate of what the segment misses, from the
    /// `|tau|^{1 - 2 sigma}` decay of the integrand.
    pub tail_estimate: f64,
}

/// `J_{k-1}(4 pi x)` as `(1/2pi) int_(sigma) gamma_ratio(k, s) x^{2(s-1)} ds / (2 pi i)`.
///
/// The segment `sigma + i[-tmax, tmax]` is integrated with `npoints`
/// Gauss-Legendre nodes. Beyond `+-tmax` the contour is rotated by 45 degrees
/// into the right half-plane, where the integrand decays faster than any
/// power; no poles are crossed because those of `Gamma((k+1)/2 - s)` are real.
pub fn mellin_barnes_j(k: u32, x: f64, sigma: f64, tmax: f64, npoints: usize) -> Result<MellinBarnes> {
    let gf = GammaFactor::new(k)?;
    if !(sigma > 1.0 && sigma < (k as f64 + 1.0) / 2.0) {
        return precondition(format!("need 1 < sigma < (k+1)/2 = {}, got {sigma}", (k as f64 + 1.0) / 2.0));
    }
    if !(x > 0.0) || !(tmax >= 0.0) {
        return precondition("need x > 0 and tmax >= 0");
    }
    let lnx2 = 2.0 * x.ln();
    let integrand = |s: C64| -> Result<C64> {
        let r = gf.ratio(s)?;
        Ok(r * ((s - 1.0) * lnx2).exp())
    };
    let gl = GaussLegendre::new(16);
    let panels = (npoints / 16).max(1);
    let width = 2.0 * tmax / panels as f64;
    let mut segment = C64::new(0.0, 0.0);
    if tmax > 0.0 {
        for p in 0..panels {
            let a = -tmax + p as f64 * width;
            let mut acc = C64::new(0.0, 0.0);
            for (t, w) in gl.panel(a, a + width) {
                acc += integrand(C64::new(sigma, t))? * w;
            }
            segment += acc;
        }
    }
    // ds = i dtau on the segment, so the prefactor is 1/(4 pi^2).
    let pref = 1.0 / (4.0 * PI * PI);
    segment *= pref;

    let up = C64::from_polar(1.0, PI / 4.0);
    let down = C64::from_polar(1.0, -PI / 4.0);
    let upper = ray_integral(&integrand, C64::new(sigma, tmax), up, &gl)?;
    let lower = ray_integral(&integrand, C64::new(sigma, -tmax), down, &gl)?;
    // ds/(2 pi i): the upper ray runs outward, the lower ray inward.
    let rays = (upper * up - lower * down) / (C64::new(0.0, TAU) * TAU);
    let edge = integrand(C64::new(sigma, tmax.max(1.0)))?.norm();
    let tail_estimate = 2.0 * pref * edge * tmax.max(1.0) / (2.0 * sigma - 2.0);
    Ok(MellinBarnes { value: segment + rays, segment, tail_estimate })
}

/// `int_0^inf f(s0 + r dir) dr` on unit-width panels until the integrand is negligible.
fn ray_integral<F>(f: &F, s0: C64, dir: C64, gl: &GaussLegendre) -> Result<C64>
where
    F: Fn(C64) -> Result<C64>,
{
    let mut total = C64::new(0.0, 0.0);
    let mut quiet = 0;
    for p in 0..2000 {
        let a = p as f64;
        let mut acc = C64::new(0.0, 0.0);
        for (r, w) in gl.panel(a, a + 1.0) {
            acc += f(s0 + dir * r)? * w;
        }
        total += acc;
        if acc.norm() <= 1e-18 * total.norm().max(1e-300) {
            quiet += 1;
            if quiet >= 3 {
                return Ok(total);
            }
        } else {
            quiet = 0;
        }
    }
    Err(Error::Truncation("Mellin-Barnes ray integral did not decay".into()))
}
