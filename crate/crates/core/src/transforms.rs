//! Smooth compactly supported test functions and the integral transforms
//! built on them: Hankel transform and its inversion, Weber's integral and a
//! Poisson summation checker.

use std::f64::consts::{PI, TAU};

use crate::error::{precondition, Error, Result};
use crate::quadrature::{GaussLegendre, SupportGrid, BUMP_BANDWIDTH};
use crate::specfun::{bessel_j_complex, bessel_j_unchecked};
use crate::{e, i_pow, C64};

/// A real smooth function on `(0, inf)` supported in a compact interval.
pub trait TestFunction: Sync {
    /// Closed interval outside of which the function vanishes.
    fn support(&self) -> (f64, f64);

    fn eval(&self, x: f64) -> f64;

    /// Frequency (cycles per unit length) beyond which the Fourier transform
    /// is negligible in double precision; sizes equispaced grids.
    fn bandwidth(&self) -> f64 {
        let (a, b) = self.support();
        BUMP_BANDWIDTH / (b - a)
    }
}

/// The canonical bump `exp(-1/(1-u^2))`, `u = (2t - a - b)/(b - a)`, on `(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpFunction {
    a: f64,
    b: f64,
}

/// Builds the canonical bump on `[a, b]`.
pub fn canonical_bump(a: f64, b: f64) -> Result<BumpFunction> {
    if !(a > 0.0 && b > a && b.is_finite()) {
        return precondition(format!("bump support needs 0 < a < b < inf, got [{a}, {b}]"));
    }
    Ok(BumpFunction { a, b })
}

impl BumpFunction {
    pub fn center(&self) -> f64 {
        0.5 * (self.a + self.b)
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.b - self.a)
    }

    fn u(&self, x: f64) -> f64 {
        (x - self.center()) / self.half_width()
    }

    /// Derivative of the given order. Orders 0 to 2 are closed form, higher
    /// orders use Richardson-extrapolated central differences.
    pub fn deriv(&self, order: u32, x: f64) -> f64 {
        let u = self.u(x);
        if u.abs() >= 1.0 {
            return 0.0;
        }
        let one = 1.0 - u * u;
        let phi = (-1.0 / one).exp();
        let du = 1.0 / self.half_width();
        match order {
            0 => phi,
            1 => phi * (-2.0 * u / (one * one)) * du,
            2 => phi * (6.0 * u.powi(4) - 2.0) / one.powi(4) * du * du,
            _ => {
                let h = 1e-3 * self.half_width();
                let d = |h: f64| (self.deriv(order - 1, x + h) - self.deriv(order - 1, x - h)) / (2.0 * h);
                (4.0 * d(h / 2.0) - d(h)) / 3.0
            }
        }
    }
}

impl TestFunction for BumpFunction {
    fn support(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    fn eval(&self, x: f64) -> f64 {
        self.deriv(0, x)
    }
}

/// Quadrature controls shared by the transform routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Base number of panels (Gauss-Legendre) or grid blocks (equispaced).
    pub panels: usize,
    /// Nodes per panel; also the node count per oscillation once the Bessel
    /// argument exceeds `oscillatory_split_threshold`.
    pub points_per_panel: usize,
    /// Bessel argument beyond which the integrand is sized by its local wavelength.
    pub oscillatory_split_threshold: f64,
    /// Absolute error target; adaptive rules refine until successive
    /// estimates agree to this level.
    pub target_abs_error: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            panels: 16,
            points_per_panel: 16,
            oscillatory_split_threshold: 25.0,
            target_abs_error: 1e-10,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.panels == 0
            || self.points_per_panel == 0
            || !(self.oscillatory_split_threshold > 0.0)
            || !(self.target_abs_error > 0.0)
        {
            return precondition("quadrature config fields must all be positive");
        }
        Ok(())
    }

    pub fn with_target(mut self, target: f64) -> Self {
        self.target_abs_error = target;
        self
    }

    /// Equispaced node count on `[a, b]` for an amplitude of the given
    /// bandwidth times an oscillation of `max_freq` cycles per unit.
    pub(crate) fn grid_size(&self, a: f64, b: f64, bandwidth: f64, max_freq: f64, max_arg: f64) -> usize {
        let base = self.panels * self.points_per_panel;
        let len = b - a;
        let spectral = (len * (bandwidth + max_freq) * 1.1).ceil() as usize + 8;
        let wavelengths = if max_arg > self.oscillatory_split_threshold {
            (len * max_freq * self.points_per_panel as f64 / 4.0).ceil() as usize
        } else {
            0
        };
        base.max(spectral).max(wavelengths)
    }
}

/// Equispaced rule on `f`'s support, doubled until two successive
/// estimates agree within `target`. Returns `(value, last difference)`.
pub(crate) fn refine_on_support<F: Fn(f64) -> f64>(
    a: f64,
    b: f64,
    n0: usize,
    target: f64,
    f: F,
) -> (f64, f64) {
    let mut n = n0.max(4);
    let mut h = (b - a) / n as f64;
    let mut sum: f64 = (1..n).map(|i| f(a + i as f64 * h)).sum();
    let mut value = h * sum;
    for _ in 0..8 {
        // Midpoints of the current grid are the new nodes.
        let mids: f64 = (0..n).map(|i| f(a + (i as f64 + 0.5) * h)).sum();
        sum += mids;
        n *= 2;
        h *= 0.5;
        let refined = h * sum;
        let diff = (refined - value).abs();
        value = refined;
        if diff <= target {
            return (value, diff);
        }
    }
    (value, f64::INFINITY)
}

/// `(H_k F)(a) = 2 pi int F(x) J_{k-1}(4 pi sqrt(a x)) dx`.
pub fn hankel<F: TestFunction + ?Sized>(k: u32, f: &F, a: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let (v, err) = hankel_with_error(k, f, a, cfg)?;
    if err > cfg.target_abs_error {
        return Err(Error::Truncation(format!(
            "Hankel transform at a = {a} did not reach {} (last change {err:e})",
            cfg.target_abs_error
        )));
    }
    Ok(v)
}

/// [`hankel`] plus the final refinement difference.
pub fn hankel_with_error<F: TestFunction + ?Sized>(
    k: u32,
    f: &F,
    a: f64,
    cfg: &QuadratureConfig,
) -> Result<(f64, f64)> {
    cfg.validate()?;
    if k < 2 || !(a >= 0.0) {
        return precondition(format!("hankel needs k >= 2 and a >= 0, got k = {k}, a = {a}"));
    }
    let (lo, hi) = f.support();
    let nu = k - 1;
    let freq = (a / lo).sqrt();
    let n = cfg.grid_size(lo, hi, f.bandwidth(), freq, 4.0 * PI * (a * hi).sqrt());
    let c = 4.0 * PI * a.sqrt();
    let (v, err) = refine_on_support(lo, hi, n, cfg.target_abs_error / TAU, |x| {
        f.eval(x) * bessel_j_unchecked(nu, c * x.sqrt())
    });
    Ok((TAU * v, TAU * err))
}

/// A tabulated Hankel transform, used when the same `H_k F` is needed at
/// many arguments.
#[derive(Debug, Clone)]
pub struct HankelTable {
    pub values: Vec<f64>,
    pub max_error: f64,
}

impl HankelTable {
    /// `(H_k F)(a_j)` for each `a_j`, in order.
    pub fn new<F: TestFunction + ?Sized>(k: u32, f: &F, args: &[f64], cfg: &QuadratureConfig) -> Result<Self> {
        let out = crate::ordered_map(args.len(), |j| hankel_with_error(k, f, args[j], cfg));
        let mut values = Vec::with_capacity(args.len());
        let mut max_error = 0.0f64;
        for r in out {
            let (v, e) = r?;
            values.push(v);
            max_error = max_error.max(e);
        }
        Ok(HankelTable { values, max_error })
    }
}

/// `(H_k (H_k F))(b)` by an outer Gauss-Legendre quadrature over `a in (0, tail_cut]`.
///
/// The outer variable is `t = sqrt(a)`, which removes the `a^{(k-1)/2}`
/// branch point at the origin. Fails when the neglected tail, extrapolated
/// from the decay of `H_k F` near the cut, exceeds the target.
pub fn hankel_roundtrip<F: TestFunction + ?Sized>(
    k: u32,
    f: &F,
    b: f64,
    cfg: &QuadratureConfig,
    tail_cut: f64,
) -> Result<f64> {
    cfg.validate()?;
    if !(b > 0.0) || !(tail_cut > 0.0) {
        return precondition("hankel_roundtrip needs b > 0 and tail_cut > 0");
    }
    let (_, hi) = f.support();
    let inner = cfg.with_target(cfg.target_abs_error * 1e-2);
    let tail = hankel_tail_estimate(k, f, tail_cut, &inner)?;
    if tail > cfg.target_abs_error {
        return Err(Error::Truncation(format!(
            "tail_cut = {tail_cut} too small: estimated neglected tail {tail:e}"
        )));
    }
    let tmax = tail_cut.sqrt();
    let panels = ((tmax * (b.sqrt() + hi.sqrt())).ceil() as usize + 4).max(cfg.panels);
    let gl = GaussLegendre::new(cfg.points_per_panel.max(16));
    let h = tmax / panels as f64;
    let nodes: Vec<(f64, f64)> = (0..panels)
        .flat_map(|p| gl.panel(p as f64 * h, (p + 1) as f64 * h).collect::<Vec<_>>())
        .collect();
    let vals = crate::ordered_map(nodes.len(), |i| hankel_with_error(k, f, nodes[i].0 * nodes[i].0, &inner));
    let c = 4.0 * PI * b.sqrt();
    let mut total = 0.0;
    for ((t, w), v) in nodes.iter().zip(vals) {
        let (hv, _) = v?;
        total += w * hv * bessel_j_unchecked(k - 1, c * t) * 2.0 * t;
    }
    Ok(TAU * total)
}

/// Extrapolated `2 pi int_cut^inf |H_k F(a)| da` assuming `exp(-beta sqrt(a))` decay.
fn hankel_tail_estimate<F: TestFunction + ?Sized>(
    k: u32,
    f: &F,
    cut: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let window_max = |center: f64| -> Result<f64> {
        let mut m = 0.0f64;
        for i in 0..12 {
            let a = center * (0.9 + 0.1 * i as f64 / 11.0);
            m = m.max(hankel_with_error(k, f, a, cfg)?.0.abs());
        }
        Ok(m)
    };
    let near = window_max(cut)?;
    let far = window_max(cut / 4.0)?;
    if near == 0.0 {
        return Ok(0.0);
    }
    if far <= near {
        return Ok(f64::INFINITY);
    }
    let root = cut.sqrt();
    let beta = 2.0 * (far / near).ln() / root;
    Ok(TAU * near * (2.0 * root / beta + 2.0 / (beta * beta)))
}

/// Frequency (cycles per unit) beyond which the Fourier transform of a
/// smooth amplitude supported in `[a, b]` stays below `rel_tol` times its
/// `L^1` norm.
///
/// The transform is sampled on a quarter-cycle grid up to the double
/// precision bandwidth of a bump on `[a, b]`; the answer is the last sample
/// above the threshold plus one grid step.
pub fn spectral_cutoff<F: Fn(f64) -> C64>(a: f64, b: f64, f: F, rel_tol: f64) -> f64 {
    let len = b - a;
    let xi_hi = 1.5 * BUMP_BANDWIDTH / len;
    let grid = SupportGrid::new(a, b, crate::quadrature::bump_grid_size(a, b, xi_hi));
    let h = grid.step();
    let pts: Vec<(f64, C64)> = grid.points().map(|y| (y, f(y))).collect();
    let l1: f64 = h * pts.iter().map(|p| p.1.norm()).sum::<f64>();
    if l1 == 0.0 {
        return 0.0;
    }
    let step = 0.25 / len;
    let n = (xi_hi / step).ceil() as usize;
    let mags = crate::ordered_map(n + 1, |j| {
        let xi = j as f64 * step;
        (h * pts.iter().map(|&(y, v)| v * e(-xi * y)).sum::<C64>()).norm()
    });
    let last = mags.iter().rposition(|&m| m > rel_tol * l1).unwrap_or(0);
    (last + 1) as f64 * step
}

/// Both sides of Weber's integral
/// `int_0^inf e^{-2 pi alpha y} J(4 pi beta sqrt y) J(4 pi gamma sqrt y) dy
///   = i^{1-k}/(2 pi alpha) J(4 pi i beta gamma / alpha) exp(-2 pi (beta^2 + gamma^2)/alpha)`,
/// with `J = J_{k-1}`.
pub fn weber_check(
    k: u32,
    alpha: C64,
    beta: f64,
    gamma: f64,
    cfg: &QuadratureConfig,
) -> Result<(C64, C64)> {
    cfg.validate()?;
    if k < 2 || !(alpha.re > 0.0) || !(beta > 0.0) || !(gamma > 0.0) {
        return precondition("weber_check needs k >= 2, Re alpha > 0, beta > 0, gamma > 0");
    }
    let nu = k - 1;
    // y = t^2; the Gaussian factor is below e^{-40} past tmax.
    let tmax = (40.0 / (TAU * alpha.re)).sqrt();
    let cycles = tmax * (2.0 * (beta + gamma) + 2.0 * alpha.im.abs() * tmax);
    let panels = (cycles.ceil() as usize + 8).max(cfg.panels);
    let gl = GaussLegendre::new(cfg.points_per_panel.max(16));
    let integrand = |t: f64| {
        let damp = (-alpha * TAU * t * t).exp();
        damp * bessel_j_unchecked(nu, 4.0 * PI * beta * t) * bessel_j_unchecked(nu, 4.0 * PI * gamma * t) * (2.0 * t)
    };
    let coarse = gl.integrate_c(0.0, tmax, panels, integrand);
    let lhs = gl.integrate_c(0.0, tmax, 2 * panels, integrand);
    if (lhs - coarse).norm() > cfg.target_abs_error.max(1e-13 * lhs.norm()) {
        return Err(Error::Truncation(format!(
            "Weber quadrature unstable: {:e}",
            (lhs - coarse).norm()
        )));
    }
    let z = C64::new(0.0, 4.0 * PI * beta * gamma) / alpha;
    let rhs = i_pow(1 - k as i64) / (alpha * TAU)
        * bessel_j_complex(nu, z)?
        * (-(beta * beta + gamma * gamma) * TAU / alpha).exp();
    Ok((lhs, rhs))
}

/// Both sides of Poisson summation for a `c`-periodic kernel `K`:
/// `sum_n K(n) V(n/X) = (X/c) sum_{|m| <= mmax} Khat(m) int V(y) e(-m X y / c) dy`,
/// with `Khat(m) = sum_{g mod c} K(g) e(m g / c)`.
///
/// `kernel[g]` holds `K(g)` for `g = 0..c-1`.
pub fn poisson_check<F: TestFunction + ?Sized>(
    kernel: &[C64],
    v: &F,
    x: f64,
    mmax: u64,
) -> Result<(C64, C64)> {
    let c = kernel.len();
    if c == 0 || !(x > 0.0) {
        return precondition("poisson_check needs a non-empty kernel and X > 0");
    }
    let (lo, hi) = v.support();
    let n0 = (x * lo).ceil() as i64;
    let n1 = (x * hi).floor() as i64;
    let mut lhs = C64::new(0.0, 0.0);
    for n in n0..=n1 {
        lhs += kernel[n.rem_euclid(c as i64) as usize] * v.eval(n as f64 / x);
    }
    let ci = c as f64;
    let max_freq = mmax as f64 * x / ci;
    let grid = SupportGrid::new(lo, hi, QuadratureConfig::default().grid_size(lo, hi, v.bandwidth(), max_freq, 0.0));
    let pts: Vec<(f64, f64)> = grid.points().map(|y| (y, v.eval(y))).collect();
    let h = grid.step();
    let mut rhs = C64::new(0.0, 0.0);
    for m in -(mmax as i64)..=(mmax as i64) {
        let khat: C64 = kernel
            .iter()
            .enumerate()
            .map(|(g, kv)| kv * crate::e_frac(m * g as i64, c as u64))
            .sum();
        if khat.norm() == 0.0 {
            continue;
        }
        let f = m as f64 * x / ci;
        let integral: C64 = pts.iter().map(|&(y, vy)| e(-f * y) * vy).sum::<C64>() * h;
        rhs += khat * integral;
    }
    Ok((lhs, rhs * (x / ci)))
}
