use tracelab::arith::DirichletCharacter;
use tracelab::forms::{self, load_fixture, CuspFormData, HarmonicBasis};
use tracelab::traceformula;
use tracelab::transforms::{canonical_bump, QuadratureConfig};
use tracelab::voronoi::{self, VoronoiTruncation};
use tracelab::C64;

fn fixture(name: &str) -> CuspFormData {
    load_fixture(format!("{}/fixtures/{name}.json", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

const ALL: [&str; 7] = ["delta", "2.8.a.a", "3.6.a.a", "4.5.b.a", "5.4.a.a", "1.24.a.a", "1.24.a.b"];

fn grid(n: u64) -> Vec<(u64, u64)> {
    (1..=n).flat_map(|m| (1..=n).map(move |k| (m, k))).collect()
}

#[test]
fn delta_harmonic_weight_matches_petersson_norm() {
    // omega = Gamma(11) / ((4 pi)^11 <Delta, Delta>) with
    // <Delta, Delta> = 1.035362056804320922e-6.
    let want = 3_628_800.0 / (4.0 * std::f64::consts::PI).powi(11) / 1.035_362_056_804_320_9e-6;
    let chi = DirichletCharacter::trivial(1);
    let cmax = traceformula::cmax_for_tail(12, 1, &chi, 1, 1, 1e-12);
    let got = forms::harmonic_weight_dim1(12, 1, &chi, cmax).unwrap();
    assert!((got - want).abs() < 1e-9 * want, "{got} vs {want}");
}

#[test]
fn petersson_holds_on_level_two() {
    let b = HarmonicBasis::one_dimensional(fixture("2.8.a.a")).unwrap();
    let f = &b.forms[0];
    let cmax = traceformula::cmax_for_tail(f.weight, f.level, &f.character, 6, 6, 1e-11);
    for c in traceformula::verify_petersson_grid(&b, f.weight, f.level, &f.character, &grid(6), cmax).unwrap() {
        assert!(c.passed(), "residual {} budget {}", c.residual, c.budget);
        assert!(c.residual < 1e-9);
    }
}

#[test]
fn petersson_holds_on_two_dimensional_space() {
    let b = HarmonicBasis::new(vec![fixture("1.24.a.a"), fixture("1.24.a.b")]).unwrap();
    let chi = DirichletCharacter::trivial(1);
    let cmax = traceformula::cmax_for_tail(24, 1, &chi, 8, 8, 1e-11);
    for c in traceformula::verify_petersson_grid(&b, 24, 1, &chi, &grid(8), cmax).unwrap() {
        assert!(c.residual < 1e-9, "residual {}", c.residual);
    }
    // A single eigenform of a two-dimensional space does not satisfy the formula.
    let half = HarmonicBasis::new(vec![fixture("1.24.a.a")]).unwrap();
    let c = traceformula::verify_petersson(&half, 24, 1, &chi, 1, 1, cmax).unwrap();
    assert!(c.residual > 0.1);
}

#[test]
fn corrupted_coefficient_breaks_petersson() {
    let f = fixture("delta");
    let bad = f.with_coefficient(3, f.a(3).unwrap() + C64::new(0.01, 0.0)).unwrap();
    let b = HarmonicBasis::one_dimensional(f).unwrap();
    let omega = b.forms[0].omega().unwrap();
    let b = HarmonicBasis::new(vec![bad.with_harmonic_weight(omega).unwrap()]).unwrap();
    let chi = DirichletCharacter::trivial(1);
    let c = traceformula::verify_petersson(&b, 12, 1, &chi, 1, 3, 512).unwrap();
    assert!(!c.passed());
    assert!(c.residual > 1e-3);
}

#[test]
fn shipped_fixtures_satisfy_hecke_relations() {
    for name in ALL {
        let r = forms::validate_assumption(&fixture(name));
        assert!(r.passed(), "{name}: {r:?}");
        assert!(r.adjoint_checked > 0);
    }
    let f = fixture("3.6.a.a");
    let broken = f.with_coefficient(6, f.a(6).unwrap() * 1.1).unwrap();
    assert!(!forms::validate_assumption(&broken).passed());
}

#[test]
fn geometric_voronoi_sides_agree() {
    let g = canonical_bump(1.0, 4.0).unwrap();
    let trunc = VoronoiTruncation::default().with_target(1e-6);
    let cfg = QuadratureConfig::default();
    let chi = DirichletCharacter::trivial(1);
    let c = voronoi::verify_voronoi_geometric(12, 1, &chi, 1, &g, &trunc, &cfg).unwrap();
    assert!(c.passed(), "residual {}", c.residual);
}

#[test]
fn spectral_voronoi_matches_coefficients() {
    let g = canonical_bump(1.0, 4.0).unwrap();
    let b = HarmonicBasis::one_dimensional(fixture("delta")).unwrap();
    let trunc = VoronoiTruncation::default().with_target(1e-6);
    let c = voronoi::verify_voronoi_spectral(&b, 2, &g, &trunc, &QuadratureConfig::default()).unwrap();
    assert!(c.residual < 1e-6, "residual {}", c.residual);
}
