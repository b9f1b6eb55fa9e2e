//! Quadrature rules: composite Gauss-Legendre for general smooth integrands
//! and the equispaced rule for amplitudes that vanish to infinite order at
//! both ends of their support.
//!
//! For a `C^infinity` function supported inside `[a, b]`, the trapezoid sum
//! is the rectangle rule for a periodic function and converges faster than
//! any power of the spacing, so for bump-weighted integrands it beats
//! Gauss-Legendre panels at equal node count.

use std::f64::consts::PI;

use crate::C64;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// `n`-point rule; nodes from Newton iteration on `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "need at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..(n + 1) / 2 {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn panel(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&t, &w)| (mid + half * t, half * w))
    }

    /// `int_a^b f` on `panels` equal panels.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, panels: usize, mut f: F) -> f64 {
        let h = (b - a) / panels as f64;
        let mut total = 0.0;
        for p in 0..panels {
            let lo = a + p as f64 * h;
            let mut acc = 0.0;
            for (x, w) in self.panel(lo, lo + h) {
                acc += w * f(x);
            }
            total += acc;
        }
        total
    }

    /// Complex-valued variant of [`GaussLegendre::integrate`].
    pub fn integrate_c<F: FnMut(f64) -> C64>(&self, a: f64, b: f64, panels: usize, mut f: F) -> C64 {
        let h = (b - a) / panels as f64;
        let mut total = C64::new(0.0, 0.0);
        for p in 0..panels {
            let lo = a + p as f64 * h;
            let mut acc = C64::new(0.0, 0.0);
            for (x, w) in self.panel(lo, lo + h) {
                acc += f(x) * w;
            }
            total += acc;
        }
        total
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Equispaced grid `x_i = a + i h`, `i = 1..n-1`, `h = (b - a)/n`.
///
/// The endpoints are dropped: amplitudes used with this rule vanish there.
#[derive(Debug, Clone)]
pub struct SupportGrid {
    pub a: f64,
    pub b: f64,
    pub n: usize,
}

impl SupportGrid {
    pub fn new(a: f64, b: f64, n: usize) -> Self {
        SupportGrid { a, b, n: n.max(2) }
    }

    pub fn step(&self) -> f64 {
        (self.b - self.a) / self.n as f64
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        let h = self.step();
        (1..self.n).map(move |i| self.a + i as f64 * h)
    }

    /// `h sum f(x_i)`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        let h = self.step();
        h * self.points().map(&mut f).sum::<f64>()
    }
}

/// Number of grid intervals on `[a, b]` that resolves a band-limited-like
/// integrand whose highest oscillation frequency (cycles per unit) is
/// `max_freq`, on top of the spectral width of a bump on `[a, b]`.
///
/// A canonical bump on an interval of length `L` has Fourier transform below
/// `1e-15` relative beyond about `163 / L` cycles per unit; aliasing from the
/// equispaced rule is negligible once `1/h` exceeds the sum.
pub fn bump_grid_size(a: f64, b: f64, max_freq: f64) -> usize {
    let len = b - a;
    let bandwidth = BUMP_BANDWIDTH / len;
    ((len * (max_freq + bandwidth)) * 1.1).ceil() as usize + 8
}

/// Cycles per unit length (times the support length) beyond which the
/// canonical bump's spectrum is below double precision.
pub const BUMP_BANDWIDTH: f64 = 163.0;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exact_on_polynomials() {
        for n in [1usize, 2, 5, 16, 20] {
            let gl = GaussLegendre::new(n);
            for deg in 0..(2 * n) {
                let got = gl.integrate(-1.0, 1.0, 1, |x| x.powi(deg as i32));
                let want = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((got - want).abs() < 1e-14, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn composite_rule_on_oscillatory_integrand() {
        let gl = GaussLegendre::new(16);
        let got = gl.integrate(0.0, 20.0, 20, |x| (3.0 * x).cos());
        assert!((got - (60.0f64).sin() / 3.0).abs() < 1e-13);
    }

    #[test]
    fn support_grid_is_spectral_for_bumps() {
        let bump = |x: f64| {
            let u = 2.0 * x - 3.0;
            if u.abs() < 1.0 { (-1.0 / (1.0 - u * u)).exp() } else { 0.0 }
        };
        let a = SupportGrid::new(1.0, 2.0, 400).integrate(bump);
        let b = SupportGrid::new(1.0, 2.0, 800).integrate(bump);
        assert!((a - b).abs() < 1e-15);
        assert!(a > 0.0);
    }
}
