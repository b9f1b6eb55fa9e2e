//! Cusp-form coefficient data: fixture ingestion, normalization, Hecke
//! structure checks and one-dimensional harmonic weights.

use std::path::Path;

use serde::Deserialize;

use crate::arith::{self, DirichletCharacter};
use crate::error::{Error, Result};
use crate::traceformula;
use crate::transforms::{canonical_bump, BumpFunction, QuadratureConfig, TestFunction};
use crate::voronoi::{self, VoronoiTruncation};
use crate::C64;

/// Normalized Fourier coefficients of one holomorphic cusp form.
///
/// `a(n) = lambda(n) / n^{(k-1)/2}` for the arithmetic coefficients
/// `lambda(n)` found in fixtures.
#[derive(Debug, Clone)]
pub struct CuspFormData {
    pub label: String,
    pub weight: u32,
    pub level: u64,
    pub character: DirichletCharacter,
    coeffs: Vec<C64>,
    pub harmonic_weight: Option<f64>,
    pub source: String,
}

impl CuspFormData {
    /// Builds a form from arithmetic coefficients `lambda(1..=N)`.
    pub fn from_arithmetic(
        label: impl Into<String>,
        weight: u32,
        level: u64,
        character: DirichletCharacter,
        lambda: &[C64],
        harmonic_weight: Option<f64>,
        source: impl Into<String>,
    ) -> Result<Self> {
        let half = (weight as f64 - 1.0) / 2.0;
        let coeffs = lambda
            .iter()
            .enumerate()
            .map(|(i, l)| l / ((i + 1) as f64).powf(half))
            .collect();
        Self::from_analytic(label, weight, level, character, coeffs, harmonic_weight, source)
    }

    /// Builds a form from already normalized coefficients `a(1..=N)`.
    pub fn from_analytic(
        label: impl Into<String>,
        weight: u32,
        level: u64,
        character: DirichletCharacter,
        coeffs: Vec<C64>,
        harmonic_weight: Option<f64>,
        source: impl Into<String>,
    ) -> Result<Self> {
        let label = label.into();
        let bad = |reason: String| Error::Fixture { origin: label.clone(), reason };
        if weight < 4 {
            return Err(bad(format!("weight {weight} below the supported minimum 4")));
        }
        if level == 0 || character.modulus() != level {
            return Err(bad(format!(
                "character modulus {} does not match level {level}",
                character.modulus()
            )));
        }
        character.check_parity(weight).map_err(|e| bad(e.to_string()))?;
        match coeffs.first() {
            Some(a1) if (a1 - 1.0).norm() < 1e-12 => {}
            Some(a1) => return Err(bad(format!("a(1) = {a1}; fixtures must be normalized with a(1) = 1"))),
            None => return Err(bad("no coefficients".into())),
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(bad("non-finite coefficient".into()));
        }
        if let Some(w) = harmonic_weight {
            if !(w > 0.0 && w.is_finite()) {
                return Err(bad(format!("harmonic weight must be positive, got {w}")));
            }
        }
        Ok(CuspFormData {
            label,
            weight,
            level,
            character,
            coeffs,
            harmonic_weight,
            source: source.into(),
        })
    }

    /// Number of stored coefficients `N`.
    pub fn num_coeffs(&self) -> u64 {
        self.coeffs.len() as u64
    }

    /// `a(1..=N)` as a slice (index `n - 1`).
    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    /// `a(n)`, or `None` beyond the stored range.
    pub fn coefficient(&self, n: u64) -> Option<C64> {
        if n == 0 {
            return None;
        }
        self.coeffs.get((n - 1) as usize).copied()
    }

    /// `a(n)`, with an error naming the required range.
    pub fn a(&self, n: u64) -> Result<C64> {
        self.coefficient(n).ok_or_else(|| Error::InsufficientCoefficients {
            label: self.label.clone(),
            required: n,
            available: self.num_coeffs(),
        })
    }

    /// `lambda(n) = a(n) n^{(k-1)/2}`.
    pub fn arithmetic_coefficient(&self, n: u64) -> Result<C64> {
        Ok(self.a(n)? * (n as f64).powf((self.weight as f64 - 1.0) / 2.0))
    }

    /// Copy with `a(n)` replaced; used for fault injection.
    pub fn with_coefficient(&self, n: u64, value: C64) -> Result<Self> {
        self.a(n)?;
        let mut out = self.clone();
        out.coeffs[(n - 1) as usize] = value;
        Ok(out)
    }

    pub fn with_harmonic_weight(mut self, w: f64) -> Result<Self> {
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::Fixture {
                origin: self.label.clone(),
                reason: format!("harmonic weight must be positive, got {w}"),
            });
        }
        self.harmonic_weight = Some(w);
        Ok(self)
    }

    /// Harmonic weight, or an error if the fixture does not carry one.
    pub fn omega(&self) -> Result<f64> {
        self.harmonic_weight.ok_or_else(|| Error::Fixture {
            origin: self.label.clone(),
            reason: "harmonic weight required but missing".into(),
        })
    }
}

// ---------------------------------------------------------------------------
// Fixture files

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FixtureFile {
    label: String,
    weight: u32,
    level: u64,
    character: CharacterSpec,
    an: Vec<serde_json::Value>,
    #[serde(default)]
    harmonic_weight: Option<f64>,
    source: String,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CharacterSpec {
    Indexed(IndexedCharacter),
    Table(TableCharacter),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct IndexedCharacter {
    modulus: u64,
    index: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TableCharacter {
    values: Vec<[f64; 2]>,
}

/// One entry of `an`: an integer (or other JSON number), a rational
/// `[num, den]` written with two integers, or a complex `[re, im]` written
/// with at least one non-integer literal.
fn parse_coefficient(v: &serde_json::Value) -> std::result::Result<C64, String> {
    use serde_json::Value;
    match v {
        Value::Number(n) => n
            .as_f64()
            .map(|x| C64::new(x, 0.0))
            .ok_or_else(|| format!("unrepresentable number {n}")),
        Value::Array(pair) if pair.len() == 2 => {
            let (a, b) = (&pair[0], &pair[1]);
            let (Value::Number(a), Value::Number(b)) = (a, b) else {
                return Err(format!("pair entries must be numbers: {v}"));
            };
            let integral = |n: &serde_json::Number| n.is_i64() || n.is_u64();
            let (x, y) = (a.as_f64().unwrap_or(f64::NAN), b.as_f64().unwrap_or(f64::NAN));
            if integral(a) && integral(b) {
                if y == 0.0 {
                    return Err(format!("zero denominator in {v}"));
                }
                Ok(C64::new(x / y, 0.0))
            } else {
                Ok(C64::new(x, y))
            }
        }
        other => Err(format!("coefficient must be a number or a pair, got {other}")),
    }
}

/// Parses fixture JSON text; `origin` labels error messages.
pub fn parse_fixture(text: &str, origin: &str) -> Result<CuspFormData> {
    let bad = |reason: String| Error::Fixture { origin: origin.to_string(), reason };
    let file: FixtureFile = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
    let character = match file.character {
        CharacterSpec::Indexed(c) => {
            if c.modulus != file.level {
                return Err(bad(format!("character modulus {} differs from level {}", c.modulus, file.level)));
            }
            arith::character(c.modulus, c.index).map_err(|e| bad(e.to_string()))?
        }
        CharacterSpec::Table(t) => {
            let vals: Vec<C64> = t.values.iter().map(|p| C64::new(p[0], p[1])).collect();
            DirichletCharacter::from_values(&vals).map_err(|e| bad(e.to_string()))?
        }
    };
    let lambda = file
        .an
        .iter()
        .enumerate()
        .map(|(i, v)| parse_coefficient(v).map_err(|r| bad(format!("an[{i}]: {r}"))))
        .collect::<Result<Vec<_>>>()?;
    CuspFormData::from_arithmetic(
        file.label,
        file.weight,
        file.level,
        character,
        &lambda,
        file.harmonic_weight,
        file.source,
    )
    .map_err(|e| match e {
        Error::Fixture { reason, .. } => bad(reason),
        other => other,
    })
}

/// Reads and validates one fixture file.
pub fn load_fixture(path: impl AsRef<Path>) -> Result<CuspFormData> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_fixture(&text, &path.display().to_string())
}

// ---------------------------------------------------------------------------
// Hecke-structure validation

/// Violations found by [`validate_assumption`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AssumptionReport {
    pub label: String,
    /// Number of `ell` with `(ell, D) = 1` checked for `conj(a(ell)) = a(ell) conj(chi(ell))`.
    pub adjoint_checked: usize,
    /// `(ell, relative deviation)` for each failure of the adjointness relation.
    pub adjoint_violations: Vec<(u64, f64)>,
    /// Number of pairs `(n, m)` with `m | D^inf`, `m > 1`, checked for `a(nm) = a(n) a(m)`.
    pub multiplicative_checked: usize,
    /// `(n, m, relative deviation)` for each failure of multiplicativity.
    pub multiplicative_violations: Vec<(u64, u64, f64)>,
}

impl AssumptionReport {
    pub fn passed(&self) -> bool {
        self.adjoint_violations.is_empty() && self.multiplicative_violations.is_empty()
    }
}

const ASSUMPTION_TOL: f64 = 1e-9;

fn rel_dev(x: C64, y: C64) -> f64 {
    let scale = x.norm().max(y.norm());
    if scale < 1e-14 {
        0.0
    } else {
        (x - y).norm() / scale
    }
}

/// Checks both Hecke-structure clauses on every coefficient in range:
/// `conj(a(ell)) = a(ell) conj(chi(ell))` for `(ell, D) = 1`, and
/// `a(nm) = a(n) a(m)` whenever `m | D^inf`.
pub fn validate_assumption(form: &CuspFormData) -> AssumptionReport {
    let d = form.level;
    let n_max = form.num_coeffs();
    let mut rep = AssumptionReport { label: form.label.clone(), ..Default::default() };
    for ell in 1..=n_max {
        if arith::gcd(ell as i64, d as i64) != 1 {
            continue;
        }
        let a = form.coeffs[(ell - 1) as usize];
        rep.adjoint_checked += 1;
        let dev = rel_dev(a.conj(), a * form.character.conj_value(ell as i64));
        if dev > ASSUMPTION_TOL {
            rep.adjoint_violations.push((ell, dev));
        }
    }
    if d > 1 {
        let ms: Vec<u64> = (2..=n_max).filter(|&m| arith::divides_power_of(m, d)).collect();
        for &m in &ms {
            let am = form.coeffs[(m - 1) as usize];
            for n in 1..=n_max / m {
                let lhs = form.coeffs[(n * m - 1) as usize];
                let rhs = form.coeffs[(n - 1) as usize] * am;
                rep.multiplicative_checked += 1;
                let dev = rel_dev(lhs, rhs);
                if dev > ASSUMPTION_TOL {
                    rep.multiplicative_violations.push((n, m, dev));
                }
            }
        }
    }
    rep
}

/// Harmonic weight of the unique normalized form in a one-dimensional space,
/// read off the `(1, 1)` Petersson identity.
///
/// Fails if the imaginary part of the geometric side is not negligible or
/// the explicit tail bound at `cmax` exceeds `1e-10`.
pub fn harmonic_weight_dim1(k: u32, d: u64, chi: &DirichletCharacter, cmax: u64) -> Result<f64> {
    let rep = traceformula::petersson_geometric(k, d, chi, 1, 1, cmax)?;
    if rep.value.im.abs() >= 1e-10 {
        return Err(Error::IdentityViolated(format!(
            "(1,1) Petersson value has imaginary part {:e}",
            rep.value.im
        )));
    }
    if rep.tail_bound >= 1e-10 {
        return Err(Error::Truncation(format!(
            "tail bound {:e} at cmax = {cmax}; try cmax >= {}",
            rep.tail_bound,
            traceformula::cmax_for_tail(k, d, chi, 1, 1, 1e-11)
        )));
    }
    Ok(rep.value.re)
}

/// Largest `cmax` the direct `(1, 1)` route may use in
/// [`HarmonicBasis::one_dimensional`] before the smoothed route takes over.
pub const DIRECT_WEIGHT_CMAX: u64 = 1 << 16;

/// Harmonic weight of the form spanning a one-dimensional space, from the
/// Petersson formula summed against a bump `g` with `ell = 1`:
/// `omega sum_n a(n) g(n)` equals the data-free geometric side.
///
/// The smoothed series shows much more cancellation in `c` than the `(1, 1)`
/// series, whose explicit tail bound needs `c` near `10^6` at weight 4.
/// Of the bumps on `[1, 4]`, `[1, 8]`, `[1, 16]` the one with the largest
/// `|sum_n a(n) g(n)|` is used; that sum must be at least `1e-3`.
pub fn harmonic_weight_smoothed(form: &CuspFormData) -> Result<f64> {
    let mut best: Option<(f64, BumpFunction, C64)> = None;
    for b in [4.0, 8.0, 16.0] {
        let g = canonical_bump(1.0, b)?;
        let mut denom = C64::new(0.0, 0.0);
        for n in 2..b as u64 {
            denom += form.a(n)? * g.eval(n as f64);
        }
        if best.as_ref().is_none_or(|(m, _, _)| denom.norm() > *m) {
            best = Some((denom.norm(), g, denom));
        }
    }
    let (size, g, denom) = best.expect("three candidate bumps");
    if size < 1e-3 {
        return Err(Error::IllConditioned(format!(
            "coefficient sums of {} against bumps on [1, 4], [1, 8], [1, 16] are all below 1e-3",
            form.label
        )));
    }
    let trunc = VoronoiTruncation { cmax_cap: 1 << 15, ..VoronoiTruncation::default().with_target(1e-10) };
    let rep = voronoi::voronoi_geometric_initial(form.weight, form.level, &form.character, 1, &g, &trunc, &QuadratureConfig::default())?;
    if !rep.converged {
        return Err(Error::Truncation(format!(
            "smoothed Petersson sum for {} stopped at cmax = {}",
            form.label, rep.cmax
        )));
    }
    let w = rep.value / denom;
    if w.im.abs() > 1e-9 * w.norm() {
        return Err(Error::IdentityViolated(format!(
            "smoothed harmonic weight of {} has imaginary part {:e}",
            form.label, w.im
        )));
    }
    Ok(w.re)
}

/// A family of forms sharing weight, level and character, standing in for an
/// orthogonal basis of the space.
#[derive(Debug, Clone, Default)]
pub struct HarmonicBasis {
    pub forms: Vec<CuspFormData>,
}

impl HarmonicBasis {
    pub fn new(forms: Vec<CuspFormData>) -> Result<Self> {
        if let Some(f0) = forms.first() {
            for f in &forms[1..] {
                if f.weight != f0.weight || f.level != f0.level || !f.character.agrees_with(&f0.character) {
                    return Err(Error::Precondition(format!(
                        "basis forms disagree: {} vs {} in weight, level or character",
                        f0.label, f.label
                    )));
                }
            }
        }
        Ok(HarmonicBasis { forms })
    }

    /// One-form basis; the harmonic weight is derived from the trace formula
    /// when the fixture does not carry one, through the `(1, 1)` identity or,
    /// when that converges too slowly, the smoothed one.
    pub fn one_dimensional(form: CuspFormData) -> Result<Self> {
        let form = match form.harmonic_weight {
            Some(_) => form,
            None => {
                let cmax = traceformula::cmax_for_tail(form.weight, form.level, &form.character, 1, 1, 1e-11);
                let w = if cmax <= DIRECT_WEIGHT_CMAX {
                    harmonic_weight_dim1(form.weight, form.level, &form.character, cmax)?
                } else {
                    harmonic_weight_smoothed(&form)?
                };
                form.with_harmonic_weight(w)?
            }
        };
        Self::new(vec![form])
    }

    pub fn dimension(&self) -> usize {
        self.forms.len()
    }

    pub fn weight(&self) -> Option<u32> {
        self.forms.first().map(|f| f.weight)
    }

    pub fn level(&self) -> Option<u64> {
        self.forms.first().map(|f| f.level)
    }

    pub fn character(&self) -> Option<&DirichletCharacter> {
        self.forms.first().map(|f| &f.character)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(an: &str, level: u64, idx: usize, k: u32) -> String {
        format!(
            r#"{{"label":"t","weight":{k},"level":{level},"character":{{"modulus":{level},"index":{idx}}},"an":{an},"source":"test"}}"#
        )
    }

    #[test]
    fn parses_all_coefficient_forms() {
        let f = parse_fixture(&tiny("[1, [3,2], [0.5, 1.5], 96168919242518876160000]", 1, 0, 12), "x").unwrap();
        let h = 5.5f64;
        assert!((f.a(2).unwrap() - C64::new(1.5 / 2f64.powf(h), 0.0)).norm() < 1e-15);
        assert!((f.a(3).unwrap() - C64::new(0.5, 1.5) / 3f64.powf(h)).norm() < 1e-15);
        let big = f.arithmetic_coefficient(4).unwrap().re;
        assert!((big / 9.616_891_924_251_888e22 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_fixtures() {
        assert!(parse_fixture(&tiny("[2, 1]", 1, 0, 12), "x").is_err());
        // Odd character with even weight.
        let err = parse_fixture(&tiny("[1, 0]", 4, 1, 6), "x").unwrap_err();
        assert!(err.to_string().contains("parity"), "{err}");
        let unknown = r#"{"label":"t","weight":12,"level":1,"character":{"modulus":1,"index":0},"an":[1],"source":"s","extra":1}"#;
        assert!(parse_fixture(unknown, "x").is_err());
        let badchar = r#"{"label":"t","weight":12,"level":1,"character":{"modulus":1,"index":0,"x":2},"an":[1],"source":"s"}"#;
        assert!(parse_fixture(badchar, "x").is_err());
        assert!(parse_fixture(&tiny("[1, [1,0]]", 1, 0, 12), "x").is_err());
        assert!(matches!(load_fixture("/nonexistent/fixture.json"), Err(Error::Io { .. })));
    }

    #[test]
    fn character_table_form_is_resolved() {
        let text = r#"{"label":"t","weight":5,"level":4,"character":{"values":[[0,0],[1,0],[0,0],[-1,0]]},"an":[1,-4,0,16],"source":"s"}"#;
        let f = parse_fixture(text, "x").unwrap();
        assert_eq!(f.character.index(), 1);
    }

    #[test]
    fn assumption_flags_perturbed_coefficient() {
        let text = tiny("[1,-4,0,16,-14,0,0,-64,81,56,0,0]", 4, 1, 5);
        let f = parse_fixture(&text, "x").unwrap();
        assert!(validate_assumption(&f).passed());
        let g = f.with_coefficient(4, f.a(4).unwrap() + 0.01).unwrap();
        let rep = validate_assumption(&g);
        // a(1 * 4) = a(1) a(4) holds for any a(4); the fault shows at a(2 * 2).
        assert!(rep.multiplicative_violations.iter().any(|&(n, m, _)| (n, m) == (2, 2)));
    }

    #[test]
    fn smoothed_weight_matches_direct_route() {
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/delta.json");
        let f = load_fixture(path).unwrap();
        let chi = f.character.clone();
        let direct = harmonic_weight_dim1(12, 1, &chi, traceformula::cmax_for_tail(12, 1, &chi, 1, 1, 1e-11)).unwrap();
        let smoothed = harmonic_weight_smoothed(&f).unwrap();
        assert!((direct - smoothed).abs() < 1e-9 * direct, "{direct} vs {smoothed}");
    }
}
