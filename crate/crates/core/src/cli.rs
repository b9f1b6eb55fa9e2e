//! Command-line front end.
//!
//! Every subcommand evaluates one family of identities and prints a report
//! with one record per check: name, value, budget, residual and verdict.
//! Exit codes: 0 when every residual is within budget, 1 when a check fails
//! or a numerical routine cannot reach its target, 2 on usage or input errors.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::arith::{self, DirichletCharacter, KloostermanKernel};
use crate::forms::{self, CuspFormData, HarmonicBasis};
use crate::specfun::{self, GammaFactor};
use crate::transforms::{self, canonical_bump, QuadratureConfig, TestFunction};
use crate::voronoi::{self, VoronoiTruncation};
use crate::{e, lfun, traceformula, Error, Result, C64};

/// Environment variable naming the directory searched for fixture files.
pub const FIXTURE_DIR_ENV: &str = "TRACE_LAB_FIXTURE_DIR";

/// Fixtures shipped with the crate.
pub const DEFAULT_FIXTURE_DIR: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");

#[derive(Debug, Parser)]
#[command(
    name = "tracelab",
    version,
    about = "Numerical checks of the trace-formula route to functional equations of GL(2) cusp forms",
    long_about = "Numerical checks of the trace-formula route to functional equations of GL(2) cusp forms.\n\n\
Each subcommand evaluates both sides of an identity and reports the residual against an explicit budget. \
Complex arguments are written as a+bi (for example 0.5+0.3i); JSON output writes complex values as [re, im].\n\n\
Fixture paths are tried as given, then inside $TRACE_LAB_FIXTURE_DIR, then inside the bundled fixture directory.\n\n\
Exit status: 0 all checks pass, 1 a check failed or did not converge, 2 usage or input error."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

/// Options shared by all subcommands; each subcommand reads the ones it needs.
#[derive(Debug, Clone, Args)]
struct Opts {
    /// Weight k of the space.
    #[arg(short = 'k', long = "weight", global = true)]
    weight: Option<u32>,
    /// Level D of the space.
    #[arg(short = 'D', long = "level", global = true)]
    level: Option<u64>,
    /// Position of the character in the enumeration of characters mod D (0 is trivial).
    #[arg(long = "char-index", global = true, default_value_t = 0)]
    char_index: usize,
    /// The index ell of the average.
    #[arg(long, global = true)]
    ell: Option<u64>,
    /// Complex point s, written a+bi.
    #[arg(long, global = true, allow_hyphen_values = true)]
    s: Option<String>,
    /// Truncation of the modulus sum (starting value when adaptive).
    #[arg(long, global = true)]
    cmax: Option<u64>,
    /// Cap on the frequency sum, or the m range of a grid.
    #[arg(long, global = true)]
    mmax: Option<u64>,
    /// Length of dual sums, or the n range of a grid.
    #[arg(long, global = true)]
    nmax: Option<u64>,
    /// Last dyadic index of the continuation (adaptive when omitted).
    #[arg(long, global = true, allow_hyphen_values = true)]
    umax: Option<i32>,
    /// Residual budget; replaces the default budget of every check.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Fixture file; repeat for a multi-form basis.
    #[arg(long = "fixture", global = true)]
    fixtures: Vec<String>,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Worker threads for the inner parallel loops.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Exponential sums: vanishing of twisted Kloosterman sums when a prime
    /// divides m, not n, and divides c twice; twisted multiplicativity that
    /// splits S_chi(ell0 D n, ell'; cD) into a plain Kloosterman sum times a
    /// Gauss sum; unit modulus of normalized Gauss sums of primitive
    /// characters; and the Ramanujan sum at 1 mod D equal to the Moebius function.
    ArithCheck,
    /// Special functions: the two closed forms of the gamma factor
    /// gamma_k(s) agree; the Mellin-Barnes contour integral of the gamma
    /// ratio reproduces J_{k-1}(4 pi x) and does not depend on the contour;
    /// the Bessel recurrence J_{k-2} - J_k = 2 J'_{k-1} holds.
    SpecfunCheck,
    /// Integral transforms: the Hankel transform is its own inverse on
    /// bump functions; Weber's integral of a product of two Bessel functions
    /// against an exponential matches its closed form; Poisson summation with
    /// a periodic twist matches the dual frequency sum.
    TransformsCheck,
    /// Petersson trace formula: the harmonic average of a(m) conj(a(n)) over
    /// the fixture basis equals the delta term plus the Kloosterman-Bessel
    /// series, for all m <= mmax and n <= nmax (default 10).
    Petersson,
    /// Data-free Voronoi identity: the c-sum of twisted Kloosterman sums
    /// against a bump, after reciprocity, completion, Poisson summation and
    /// twisted multiplicativity, equals the dual sum over n with the Hankel
    /// transform of the bump. Both expansions are evaluated independently.
    VoronoiGeometric,
    /// Spectral Voronoi identity: the harmonic average of conj(a(ell)) sum_n
    /// a(n) g(n) equals the dual-coefficient sum against the Hankel transform
    /// of g, and agrees with the geometric expansion of the same average.
    VoronoiSpectral,
    /// Analytic continuation: the harmonic average of conj(a(ell)) L(s, f),
    /// continued through dyadic pieces of the trace formula. For Re s >= 1.2
    /// with fixtures it is compared with the Dirichlet series.
    ContinueL,
    /// Functional equation: the continued average A_1(s) equals
    /// rho D^{1/2-s} gamma_k(1-s)/gamma_k(s) conj(A_1(1-conj(s))), with the
    /// root number rho read from the fixture (i^k at level one).
    FeCheck,
    /// Isolation: individual L(s, f) recovered from the averages A_ell(s) for
    /// several ell by inverting the matrix of coefficients conj(a_f(ell)).
    Isolate,
    /// Fixture validation: conj(a(ell)) = a(ell) conj(chi(ell)) for ell
    /// coprime to D, a(nm) = a(n) a(m) for m dividing a power of D, and a
    /// root number of modulus one.
    FixturesValidate,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::ArithCheck => "arith-check",
            Command::SpecfunCheck => "specfun-check",
            Command::TransformsCheck => "transforms-check",
            Command::Petersson => "petersson",
            Command::VoronoiGeometric => "voronoi-geometric",
            Command::VoronoiSpectral => "voronoi-spectral",
            Command::ContinueL => "continue-l",
            Command::FeCheck => "fe-check",
            Command::Isolate => "isolate",
            Command::FixturesValidate => "fixtures-validate",
        }
    }
}

// ---------------------------------------------------------------------------
// Reports

/// One verified quantity.
#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub value: Value,
    pub budget: f64,
    pub residual: f64,
    pub pass: bool,
}

impl CheckRecord {
    fn new(name: impl Into<String>, value: Value, residual: f64, budget: f64) -> Self {
        CheckRecord { name: name.into(), value, budget, residual, pass: residual <= budget }
    }

    /// A check that also fails when the underlying refinement hit a cap.
    fn converged(mut self, converged: bool) -> Self {
        self.pass &= converged;
        self
    }
}

/// Output of one subcommand.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub pass: bool,
    pub checks: Vec<CheckRecord>,
}

/// `[re, im]`.
fn cjson(z: C64) -> Value {
    json!([z.re, z.im])
}

fn fmt_value(v: &Value) -> String {
    match v {
        Value::Array(items) if items.len() == 2 && items.iter().all(Value::is_number) => {
            let re = items[0].as_f64().unwrap_or(f64::NAN);
            let im = items[1].as_f64().unwrap_or(f64::NAN);
            format!("{re:.12e}{:+.12e}i", im)
        }
        other => other.to_string(),
    }
}

fn write_report(report: &Report, format: Format, out: &mut dyn Write) -> std::io::Result<()> {
    match format {
        Format::Json => {
            let text = serde_json::to_string_pretty(report).map_err(std::io::Error::other)?;
            writeln!(out, "{text}")
        }
        Format::Table => {
            let width = report.checks.iter().map(|c| c.name.len()).max().unwrap_or(4).max(4);
            writeln!(out, "{}", report.command)?;
            writeln!(out, "{:<6} {:<width$} {:>12} {:>12}  value", "status", "name", "residual", "budget")?;
            for c in &report.checks {
                let status = if c.pass { "PASS" } else { "FAIL" };
                writeln!(
                    out,
                    "{status:<6} {:<width$} {:>12.3e} {:>12.3e}  {}",
                    c.name,
                    c.residual,
                    c.budget,
                    fmt_value(&c.value)
                )?;
            }
            writeln!(out, "overall: {}", if report.pass { "PASS" } else { "FAIL" })
        }
    }
}

// ---------------------------------------------------------------------------
// Argument helpers

/// Parses `a`, `bi`, `a+bi` or `a-bi`.
pub fn parse_complex(text: &str) -> Result<C64> {
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::Precondition(format!("cannot parse complex number {text:?}; expected a+bi"));
    if t.is_empty() {
        return Err(bad());
    }
    let Some(body) = t.strip_suffix('i') else {
        return match t.parse::<f64>() {
            Ok(re) if re.is_finite() => Ok(C64::new(re, 0.0)),
            _ => Err(bad()),
        };
    };
    // Split before the last sign that is not an exponent sign.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(i) => (&body[..i], &body[i..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        other => other.parse::<f64>().map_err(|_| bad())?,
    };
    let re = re.parse::<f64>().map_err(|_| bad())?;
    let z = C64::new(re, im);
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(bad());
    }
    Ok(z)
}

/// Locates a fixture: as given, then in `$TRACE_LAB_FIXTURE_DIR`, then in
/// the bundled directory.
pub fn resolve_fixture(name: &str) -> Result<PathBuf> {
    let direct = PathBuf::from(name);
    if direct.is_file() {
        return Ok(direct);
    }
    let mut tried = vec![direct.display().to_string()];
    let mut dirs = Vec::new();
    if let Ok(dir) = std::env::var(FIXTURE_DIR_ENV) {
        dirs.push(PathBuf::from(dir));
    }
    dirs.push(PathBuf::from(DEFAULT_FIXTURE_DIR));
    for dir in dirs {
        let p = dir.join(name);
        if p.is_file() {
            return Ok(p);
        }
        tried.push(p.display().to_string());
    }
    Err(Error::Io { path: name.to_string(), message: format!("fixture not found; tried {}", tried.join(", ")) })
}

fn fixture_dir() -> PathBuf {
    std::env::var(FIXTURE_DIR_ENV).map(PathBuf::from).unwrap_or_else(|_| PathBuf::from(DEFAULT_FIXTURE_DIR))
}

fn load_fixtures(names: &[String]) -> Result<Vec<CuspFormData>> {
    names.iter().map(|n| forms::load_fixture(resolve_fixture(n)?)).collect()
}

/// The space `(k, D, chi)` selected on the command line, with the basis when
/// fixtures are given.
struct Space {
    k: u32,
    d: u64,
    chi: DirichletCharacter,
    basis: Option<HarmonicBasis>,
}

impl Opts {
    fn budget(&self, default: f64) -> Result<f64> {
        match self.tol {
            None => Ok(default),
            Some(t) if t > 0.0 && t.is_finite() => Ok(t),
            Some(t) => Err(Error::Precondition(format!("--tol must be positive, got {t}"))),
        }
    }

    fn s(&self, default: C64) -> Result<C64> {
        self.s.as_deref().map_or(Ok(default), parse_complex)
    }

    fn basis(&self) -> Result<Option<HarmonicBasis>> {
        if self.fixtures.is_empty() {
            return Ok(None);
        }
        let mut forms = load_fixtures(&self.fixtures)?;
        if forms.len() == 1 {
            return HarmonicBasis::one_dimensional(forms.remove(0)).map(Some);
        }
        if let Some(f) = forms.iter().find(|f| f.harmonic_weight.is_none()) {
            return Err(Error::Precondition(format!(
                "fixture {} has no harmonic_weight; multi-form bases need it for every form",
                f.label
            )));
        }
        HarmonicBasis::new(forms).map(Some)
    }

    /// Space from the fixtures when given, else from `-k`, `-D`, `--char-index`.
    fn space(&self, need_basis: bool) -> Result<Space> {
        if let Some(basis) = self.basis()? {
            let f = &basis.forms[0];
            let (k, d, chi) = (f.weight, f.level, f.character.clone());
            if self.weight.is_some_and(|w| w != k) || self.level.is_some_and(|l| l != d) {
                return Err(Error::Precondition(format!(
                    "fixture {} lives in weight {k}, level {d}, which contradicts -k/-D",
                    f.label
                )));
            }
            return Ok(Space { k, d, chi, basis: Some(basis) });
        }
        if need_basis {
            return Err(Error::Precondition("this subcommand needs at least one --fixture".into()));
        }
        let k = self.weight.ok_or_else(|| Error::Precondition("missing -k/--weight (or --fixture)".into()))?;
        let d = self.level.unwrap_or(1);
        let chi = arith::character(d, self.char_index)?;
        chi.check_parity(k)?;
        Ok(Space { k, d, chi, basis: None })
    }

    fn truncation(&self, target: f64) -> Result<VoronoiTruncation> {
        let mut t = VoronoiTruncation::default().with_target(target);
        if let Some(c) = self.cmax {
            t.cmax = c;
            t.cmax_cap = t.cmax_cap.max(c);
        }
        t.mmax = self.mmax;
        t.nmax = self.nmax;
        t.validate()?;
        Ok(t)
    }
}

// ---------------------------------------------------------------------------
// Suites

fn max_by<T>(items: impl IntoIterator<Item = T>, f: impl Fn(&T) -> f64) -> (f64, Option<T>) {
    let mut best = (f64::NEG_INFINITY, None);
    for it in items {
        let v = f(&it);
        if !(v <= best.0) {
            best = (v, Some(it));
        }
    }
    if best.1.is_none() {
        best.0 = 0.0;
    }
    best
}

/// Exponential-sum checks. `level` restricts the character moduli.
pub fn arith_suite(level: Option<u64>, cbound: u64, budget: f64) -> Result<Vec<CheckRecord>> {
    let levels: Vec<u64> = match level {
        Some(d) => vec![d],
        None => (1..=24).collect(),
    };
    // Vanishing: every (m, n, c) with m, n <= 20, D | c <= cbound where the
    // conductor-aware hypothesis holds. Cases meeting only the character-free
    // hypothesis are counted separately; their sums need not vanish.
    let mut worst = 0.0f64;
    let (mut cases, mut excluded) = (0u64, 0u64);
    for &d in &levels {
        let chars = arith::build_characters(d);
        let moduli: Vec<u64> = (1..=cbound / d).map(|j| j * d).collect();
        let per_c = crate::ordered_map(moduli.len(), |i| -> Result<(f64, u64, u64)> {
            let c = moduli[i];
            let (mut w, mut hit, mut skip) = (0.0f64, 0u64, 0u64);
            for chi in &chars {
                let pairs: Vec<(i64, i64)> = (1..=20i64)
                    .flat_map(|m| (1..=20i64).map(move |n| (m, n)))
                    .filter(|&(m, n)| arith::vanishing_hypothesis(m, n, c))
                    .collect();
                if pairs.is_empty() {
                    continue;
                }
                let ker = KloostermanKernel::new(c, Some(chi))?;
                for (m, n) in pairs {
                    if arith::vanishing_applies(chi, m, n, c) {
                        w = w.max(ker.sum(m, n).norm() / c as f64);
                        hit += 1;
                    } else {
                        skip += 1;
                    }
                }
            }
            Ok((w, hit, skip))
        });
        for r in per_c {
            let (w, n, x) = r?;
            worst = worst.max(w);
            cases += n;
            excluded += x;
        }
    }
    let mut out = vec![CheckRecord::new(
        "kloosterman_vanishing",
        json!({ "cases": cases, "excluded_by_conductor": excluded }),
        worst,
        budget,
    )];

    // Twisted multiplicativity for primitive characters.
    let mult_levels: Vec<u64> = match level {
        Some(d) => vec![d],
        None => vec![5, 7, 8, 12],
    };
    let mut worst = 0.0f64;
    let mut cases = 0u64;
    for &d in &mult_levels {
        for chi in arith::build_characters(d).iter().filter(|c| d > 1 && c.is_primitive()) {
            for c in (1..=30u64).filter(|&c| arith::gcd(c as i64, d as i64) == 1) {
                for ell in 1..=12 {
                    for n in 1..=12 {
                        let (l, r) = arith::check_twisted_multiplicativity(chi, ell, n, c)?;
                        worst = worst.max((l - r).norm());
                        cases += 1;
                    }
                }
            }
        }
    }
    out.push(CheckRecord::new("twisted_multiplicativity", json!(cases), worst, budget));

    // Gauss sums of primitive characters have modulus one.
    let gauss_levels: Vec<u64> = match level {
        Some(d) => vec![d],
        None => (2..=50).collect(),
    };
    let (worst, _) = max_by(
        gauss_levels.iter().flat_map(|&d| arith::build_characters(d)).filter(|c| c.is_primitive()),
        |c| (arith::gauss_sum(c).norm() - 1.0).abs(),
    );
    out.push(CheckRecord::new("gauss_sum_modulus", json!(gauss_levels.len()), worst, budget));

    // Ramanujan sum at 1 mod D equals mu(D); exact integers.
    let top = level.unwrap_or(200);
    let mismatches = (1..=top).filter(|&d| arith::ramanujan_sum(d) != arith::moebius(d) as i64).count();
    out.push(CheckRecord::new("ramanujan_equals_moebius", json!(top), mismatches as f64, 0.0));
    Ok(out)
}

/// Fourth-order central difference.
fn derivative(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (8.0 * (f(x + h) - f(x - h)) - (f(x + 2.0 * h) - f(x - 2.0 * h))) / (12.0 * h)
}

/// Gamma-factor, Mellin-Barnes and Bessel checks.
pub fn specfun_suite(budget: Option<f64>) -> Result<Vec<CheckRecord>> {
    let b = |default: f64| budget.unwrap_or(default);
    let mut out = Vec::new();

    let mut worst = 0.0f64;
    for k in 4..=16u32 {
        let gf = GammaFactor::new(k)?;
        for j in 0..20 {
            let s = C64::new(-1.0 + 0.3 * j as f64, -12.0 + 1.3 * j as f64);
            let a = gf.eval(s)?;
            let d = gf.eval_duplication(s)?;
            worst = worst.max((a - d).norm() / a.norm());
        }
    }
    out.push(CheckRecord::new("gamma_closed_forms", json!(13 * 20), worst, b(1e-10)));

    let cases: [(u32, f64, f64); 6] =
        [(12, 0.5, 3.0), (12, 0.5, 2.0), (4, 0.1, 2.0), (6, 0.3, 2.5), (8, 0.8, 3.0), (16, 1.0, 5.0)];
    for (k, x, sigma) in cases {
        let mb = specfun::mellin_barnes_j(k, x, sigma, 60.0, 4096)?;
        let j = specfun::bessel_j(k - 1, 4.0 * std::f64::consts::PI * x)?;
        out.push(CheckRecord::new(
            format!("mellin_barnes_k{k}_x{x}_sigma{sigma}"),
            cjson(mb.value),
            (mb.value - j).norm() / j.abs(),
            b(1e-8),
        ));
    }
    let s2 = specfun::mellin_barnes_j(12, 0.5, 2.0, 60.0, 4096)?.value;
    let s3 = specfun::mellin_barnes_j(12, 0.5, 3.0, 60.0, 4096)?.value;
    out.push(CheckRecord::new("mellin_barnes_sigma_independence", cjson(s2), (s2 - s3).norm() / s3.norm(), b(1e-8)));

    let mut worst = 0.0f64;
    for k in [4u32, 6, 8, 12, 16] {
        let mut x = 0.1;
        while x <= 100.0 {
            let jp = derivative(|t| specfun::bessel_j_unchecked(k - 1, t), x, 1e-3);
            let r = specfun::bessel_j(k - 2, x)? - specfun::bessel_j(k, x)? - 2.0 * jp;
            worst = worst.max(r.abs());
            x *= 1.15;
        }
    }
    out.push(CheckRecord::new("bessel_recurrence", json!(5), worst, b(1e-9)));
    Ok(out)
}

/// Interior points used by the Hankel inversion check.
pub const ROUNDTRIP_POINTS: [f64; 10] = [1.05, 1.15, 1.25, 1.35, 1.45, 1.55, 1.65, 1.75, 1.85, 1.95];

/// Where the outer integral of the Hankel inversion is cut.
pub const ROUNDTRIP_TAIL_CUT: f64 = 4.0e4;

/// Hankel inversion, Weber and Poisson checks.
pub fn transforms_suite(budget: Option<f64>) -> Result<Vec<CheckRecord>> {
    let b = |default: f64| budget.unwrap_or(default);
    let mut out = Vec::new();
    let g = canonical_bump(1.0, 2.0)?;
    let cfg = QuadratureConfig::default().with_target(1e-7);
    for k in [4u32, 6, 12] {
        let mut worst = 0.0f64;
        for &x in &ROUNDTRIP_POINTS {
            let v = transforms::hankel_roundtrip(k, &g, x, &cfg, ROUNDTRIP_TAIL_CUT)?;
            worst = worst.max((v - g.eval(x)).abs());
        }
        out.push(CheckRecord::new(format!("hankel_inversion_k{k}"), json!(ROUNDTRIP_POINTS.len()), worst, b(1e-6)));
    }

    let cfg = QuadratureConfig::default();
    let alphas = [C64::new(0.5, 0.25), C64::new(1.0, 0.0), C64::new(2.0, -1.0)];
    let mut worst = 0.0f64;
    let mut i = 0;
    for &alpha in &alphas {
        for beta in [0.1, 0.3, 0.6] {
            for gamma in [0.2, 0.4, 0.7] {
                let k = [4u32, 6, 12][i % 3];
                i += 1;
                let (l, r) = transforms::weber_check(k, alpha, beta, gamma, &cfg)?;
                worst = worst.max((l - r).norm() / (1.0 + r.norm()));
            }
        }
    }
    out.push(CheckRecord::new("weber_identity", json!(27), worst, b(1e-8)));

    let one = vec![C64::new(1.0, 0.0)];
    let k3: Vec<C64> = (0..3).map(|n| e(n as f64 / 3.0)).collect();
    for (name, kernel, x, mmax) in [("trivial_x10", &one, 10.0, 40), ("cubic_x10", &k3, 10.0, 120), ("trivial_x0.4", &one, 0.4, 500)] {
        let (l, r) = transforms::poisson_check(kernel, &g, x, mmax)?;
        out.push(CheckRecord::new(format!("poisson_{name}"), cjson(l), (l - r).norm(), b(1e-8)));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Subcommands

fn petersson(opts: &Opts) -> Result<Vec<CheckRecord>> {
    let sp = opts.space(true)?;
    let basis = sp.basis.expect("space(true) returns a basis");
    let budget = opts.budget(1e-9)?;
    let (mm, nn) = (opts.mmax.unwrap_or(10), opts.nmax.unwrap_or(10));
    if mm == 0 || nn == 0 {
        return Err(Error::Precondition("--mmax and --nmax must be positive".into()));
    }
    let cmax = match opts.cmax {
        Some(c) => c,
        None => traceformula::cmax_for_tail(sp.k, sp.d, &sp.chi, mm, nn, budget * 1e-2),
    };
    let pairs: Vec<(u64, u64)> = (1..=mm).flat_map(|m| (1..=nn).map(move |n| (m, n))).collect();
    let checks = traceformula::verify_petersson_grid(&basis, sp.k, sp.d, &sp.chi, &pairs, cmax)?;
    Ok(pairs
        .iter()
        .zip(checks)
        .map(|(&(m, n), c)| {
            CheckRecord::new(format!("petersson_m{m}_n{n}"), cjson(c.spectral), c.residual, budget)
                .converged(c.geometric.budget() <= budget)
        })
        .collect())
}

fn voronoi_geometric(opts: &Opts) -> Result<Vec<CheckRecord>> {
    let sp = opts.space(false)?;
    let budget = opts.budget(1e-6)?;
    let ell = opts.ell.unwrap_or(1);
    let g = canonical_bump(1.0, 4.0)?;
    let trunc = opts.truncation(budget)?;
    let c = voronoi::verify_voronoi_geometric(sp.k, sp.d, &sp.chi, ell, &g, &trunc, &QuadratureConfig::default())?;
    Ok(vec![CheckRecord::new(
        format!("voronoi_geometric_k{}_D{}_chi{}_ell{ell}", sp.k, sp.d, sp.chi.index()),
        cjson(c.lhs.value),
        c.residual,
        budget,
    )
    .converged(c.lhs.converged && c.rhs.converged)])
}

fn voronoi_spectral(opts: &Opts) -> Result<Vec<CheckRecord>> {
    let sp = opts.space(true)?;
    let basis = sp.basis.expect("space(true) returns a basis");
    let budget = opts.budget(1e-6)?;
    let ell = opts.ell.unwrap_or(1);
    let g = canonical_bump(1.0, 4.0)?;
    let trunc = opts.truncation(budget)?;
    let cfg = QuadratureConfig::default();
    let lhs = voronoi::voronoi_spectral_lhs(&basis, ell, &g)?;
    let geo = voronoi::voronoi_geometric_initial(sp.k, sp.d, &sp.chi, ell, &g, &trunc, &cfg)?;
    let rhs = voronoi::voronoi_spectral_rhs(&basis, ell, &g, &trunc, &cfg)?;
    Ok(vec![
        CheckRecord::new(format!("spectral_vs_dual_ell{ell}"), cjson(lhs), (lhs - rhs.value).norm(), budget)
            .converged(rhs.converged),
        CheckRecord::new(format!("spectral_vs_geometric_ell{ell}"), cjson(lhs), (lhs - geo.value).norm(), budget)
            .converged(geo.converged),
    ])
}

fn continue_l(opts: &Opts) -> Result<Vec<CheckRecord>> {
    let sp = opts.space(false)?;
    let budget = opts.budget(1e-6)?;
    let ell = opts.ell.unwrap_or(1);
    let s = opts.s(C64::new(2.0, 0.0))?;
    let trunc = opts.truncation(budget)?;
    let rep = lfun::a_ell_continued(sp.k, sp.d, &sp.chi, ell, s, opts.umax, &trunc)?;
    let name = format!("continued_average_ell{ell}");
    match &sp.basis {
        Some(basis) if s.re >= lfun::DIRICHLET_MIN_RE => {
            let n = basis.forms.iter().map(|f| f.num_coeffs()).min().unwrap_or(0);
            let oracle = lfun::spectral_average(basis, ell, s, n)?;
            Ok(vec![CheckRecord::new(name, cjson(rep.value), (rep.value - oracle).norm(), budget).converged(rep.converged)])
        }
        _ => Ok(vec![CheckRecord::new(name, cjson(rep.value), rep.error_estimate, budget).converged(rep.converged)]),
    }
}

fn fe_check(opts: &Opts) -> Result<Vec<CheckRecord>> {
    let sp = opts.space(false)?;
    let budget = opts.budget(1e-6)?;
    let s = opts.s(C64::new(0.5, 0.3))?;
    let trunc = opts.truncation(budget)?;
    let form = sp.basis.as_ref().map(|b| &b.forms[0]);
    let fe = lfun::fe_residual(sp.k, sp.d, &sp.chi, form, s, opts.umax, &trunc)?;
    Ok(vec![
        CheckRecord::new("root_number_modulus", cjson(fe.root.value), (fe.root.value.norm() - 1.0).abs(), lfun::ROOT_MODULUS_TOL),
        CheckRecord::new(format!("functional_equation_s{}{:+}i", s.re, s.im), cjson(fe.lhs), fe.residual, budget)
            .converged(fe.converged),
    ])
}

fn isolate(opts: &Opts) -> Result<Vec<CheckRecord>> {
    let sp = opts.space(true)?;
    let basis = sp.basis.expect("space(true) returns a basis");
    let budget = opts.budget(1e-4)?;
    let s = opts.s(C64::new(2.0, 0.0))?;
    let ells = lfun::choose_ells(&basis, 20)?;
    let trunc = opts.truncation((budget * 1e-2).min(1e-6))?;
    let values = lfun::isolate_lvalues(&basis, &ells, s, opts.umax, &trunc)?;
    basis
        .forms
        .iter()
        .zip(values)
        .map(|(f, v)| {
            let name = format!("isolated_L_{}", f.label);
            if s.re >= lfun::DIRICHLET_MIN_RE {
                let d = lfun::dirichlet_l(f, s, f.num_coeffs())?;
                Ok(CheckRecord::new(name, cjson(v), (v - d.value).norm(), budget))
            } else {
                Ok(CheckRecord::new(name, cjson(v), 0.0, budget))
            }
        })
        .collect()
}

fn fixtures_validate(opts: &Opts) -> Result<Vec<CheckRecord>> {
    let paths: Vec<PathBuf> = if opts.fixtures.is_empty() {
        let dir = fixture_dir();
        let mut v: Vec<PathBuf> = std::fs::read_dir(&dir)
            .map_err(|e| Error::Io { path: dir.display().to_string(), message: e.to_string() })?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        v.sort();
        v
    } else {
        opts.fixtures.iter().map(|n| resolve_fixture(n)).collect::<Result<_>>()?
    };
    let budget = opts.budget(1e-9)?;
    let mut out = Vec::new();
    for p in &paths {
        let f = forms::load_fixture(p)?;
        let rep = forms::validate_assumption(&f);
        let worst = rep
            .adjoint_violations
            .iter()
            .map(|v| v.1)
            .chain(rep.multiplicative_violations.iter().map(|v| v.2))
            .fold(0.0, f64::max);
        out.push(CheckRecord {
            name: format!("assumption_{}", f.label),
            value: json!(rep.adjoint_checked + rep.multiplicative_checked),
            budget,
            residual: worst,
            pass: rep.passed() && worst <= budget,
        });
        let (value, residual) = match lfun::root_number(&f) {
            Ok(r) => (cjson(r.value), (r.value.norm() - 1.0).abs()),
            Err(Error::IdentityViolated(_)) => (Value::Null, f64::INFINITY),
            Err(e) => return Err(e),
        };
        out.push(CheckRecord::new(format!("root_number_{}", f.label), value, residual, lfun::ROOT_MODULUS_TOL));
    }
    if out.is_empty() {
        return Err(Error::Io { path: fixture_dir().display().to_string(), message: "no fixtures found".into() });
    }
    Ok(out)
}

fn dispatch(command: Command, opts: &Opts) -> Result<Vec<CheckRecord>> {
    match command {
        Command::ArithCheck => arith_suite(opts.level, opts.cmax.unwrap_or(400), opts.budget(1e-9)?),
        Command::SpecfunCheck => specfun_suite(opts.tol.map(|_| opts.budget(0.0)).transpose()?),
        Command::TransformsCheck => transforms_suite(opts.tol.map(|_| opts.budget(0.0)).transpose()?),
        Command::Petersson => petersson(opts),
        Command::VoronoiGeometric => voronoi_geometric(opts),
        Command::VoronoiSpectral => voronoi_spectral(opts),
        Command::ContinueL => continue_l(opts),
        Command::FeCheck => fe_check(opts),
        Command::Isolate => isolate(opts),
        Command::FixturesValidate => fixtures_validate(opts),
    }
}

/// Exit status for a library error: 1 for numerical failures, 2 for bad input.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Truncation(_) | Error::NonFinite(_) | Error::IllConditioned(_) | Error::IdentityViolated(_) => 1,
        Error::Precondition(_)
        | Error::NotInvertible { .. }
        | Error::Parity { .. }
        | Error::Fixture { .. }
        | Error::InsufficientCoefficients { .. }
        | Error::Unsupported(_)
        | Error::Io { .. } => 2,
    }
}

/// Runs the command line `argv` (program name first) and returns the exit status.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let opts = &cli.opts;
    let result = match opts.threads {
        Some(0) => Err(Error::Precondition("--threads must be positive".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(cli.command, opts)),
            Err(e) => Err(Error::Precondition(format!("cannot start thread pool: {e}"))),
        },
        None => dispatch(cli.command, opts),
    };
    match result {
        Ok(checks) => {
            let pass = checks.iter().all(|c| c.pass);
            let report = Report { command: cli.command.name().to_string(), pass, checks };
            if let Err(e) = write_report(&report, opts.format, out) {
                let _ = writeln!(err, "error: cannot write report: {e}");
                return 2;
            }
            if pass {
                0
            } else {
                1
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_parsing() {
        let cases = [
            ("2", C64::new(2.0, 0.0)),
            ("0.5+0.3i", C64::new(0.5, 0.3)),
            ("0.5-0.3i", C64::new(0.5, -0.3)),
            ("-1e-3+2e-1i", C64::new(-1e-3, 0.2)),
            ("1e+2-1E-2i", C64::new(100.0, -0.01)),
            ("0.3i", C64::new(0.0, 0.3)),
            ("-i", C64::new(0.0, -1.0)),
            ("1+i", C64::new(1.0, 1.0)),
            (" 0.4 + 0.1i ", C64::new(0.4, 0.1)),
        ];
        for (text, want) in cases {
            assert_eq!(parse_complex(text).unwrap(), want, "{text}");
        }
        for bad in ["", "i2", "0.5+", "abc", "1+2j", "nan", "inf", "1+infi"] {
            assert!(parse_complex(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn exit_codes_by_error_kind() {
        assert_eq!(exit_code(&Error::Truncation("x".into())), 1);
        assert_eq!(exit_code(&Error::IdentityViolated("x".into())), 1);
        assert_eq!(exit_code(&Error::Parity { weight: 6, parity: -1 }), 2);
        assert_eq!(exit_code(&Error::Io { path: "p".into(), message: "m".into() }), 2);
    }

    #[test]
    fn bundled_fixtures_resolve() {
        assert!(resolve_fixture("delta.json").is_ok());
        assert!(matches!(resolve_fixture("no-such-fixture.json"), Err(Error::Io { .. })));
    }

    #[test]
    fn max_by_handles_empty_input() {
        assert_eq!(max_by(Vec::<f64>::new(), |x| *x).0, 0.0);
        assert_eq!(max_by(vec![1.0, 3.0, 2.0], |x| *x), (3.0, Some(3.0)));
    }
}
