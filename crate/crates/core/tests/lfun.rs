use tracelab::arith::DirichletCharacter;
use tracelab::forms::{load_fixture, CuspFormData, HarmonicBasis};
use tracelab::lfun::{self, RootCase};
use tracelab::voronoi::VoronoiTruncation;
use tracelab::C64;

fn fixture(name: &str) -> CuspFormData {
    load_fixture(format!("{}/fixtures/{name}.json", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn delta_basis() -> HarmonicBasis {
    HarmonicBasis::one_dimensional(fixture("delta")).unwrap()
}

fn trunc(target: f64) -> VoronoiTruncation {
    VoronoiTruncation::default().with_target(target)
}

#[test]
fn continuation_matches_dirichlet_series_at_two() {
    let b = delta_basis();
    let f = &b.forms[0];
    let s = C64::new(2.0, 0.0);
    let l = lfun::dirichlet_l(f, s, f.num_coeffs()).unwrap().value;
    for (ell, want) in [(1, f.omega().unwrap() * l), (2, f.omega().unwrap() * f.a(2).unwrap().conj() * l)] {
        let got = lfun::a_ell_continued(12, 1, &DirichletCharacter::trivial(1), ell, s, None, &trunc(1e-7)).unwrap();
        assert!((got.value - want).norm() < 1e-5, "ell {ell}: {} vs {want}", got.value);
        assert!(got.converged);
    }
    // Isolation in a one-dimensional space divides by the harmonic weight.
    let iso = lfun::isolate_lvalues(&b, &[1], s, None, &trunc(1e-7)).unwrap();
    assert!((iso[0] - l).norm() < 1e-5);
}

#[test]
fn dirichlet_series_symmetries() {
    let f = fixture("delta");
    let s = C64::new(2.0, 0.0);
    let v = lfun::dirichlet_l(&f, s, 10_000).unwrap().value;
    assert!(v.im.abs() < 1e-15, "real s gives a real value for real coefficients");
    let g = fixture("4.5.b.a");
    let s = C64::new(2.0, 0.7);
    let dual = lfun::dirichlet_l_dual(&g, s, 5_000).unwrap().value;
    let primal = lfun::dirichlet_l(&g, s.conj(), 5_000).unwrap().value;
    assert!((dual - primal.conj()).norm() < 1e-14);
}

#[test]
fn dirichlet_series_truncation_stability() {
    // Oracle: the same partial sums in double precision give a change of 9.92e-9.
    let f = fixture("delta");
    let s = C64::new(2.0, 0.0);
    let a = lfun::dirichlet_l(&f, s, 10_000).unwrap();
    let b = lfun::dirichlet_l(&f, s, 20_000).unwrap();
    let change = (a.value - b.value).norm();
    assert!(change <= a.tail_estimate, "change {change} vs tail {}", a.tail_estimate);
    assert!(change < 1e-8, "change {change}");
}

#[test]
fn series_refuses_the_strip() {
    let f = fixture("delta");
    assert!(lfun::dirichlet_l(&f, C64::new(1.0, 0.0), 100).is_err());
    assert!(lfun::dirichlet_l(&f, C64::new(2.0, 0.0), f.num_coeffs() + 1).is_err());
}

#[test]
fn dual_average_is_conjugate_of_primal() {
    let g = fixture("4.5.b.a");
    let chi = g.character.clone();
    let t = trunc(1e-6);
    for s in [C64::new(2.0, 0.0), C64::new(1.5, 1.0), C64::new(1.2, -2.0), C64::new(0.7, 0.4), C64::new(0.5, -1.5)] {
        let primal = lfun::a_ell_continued(5, 4, &chi, 1, s, None, &t).unwrap();
        let dual = lfun::a_ell_dual_continued(5, 4, &chi, 1, s.conj(), None, &t).unwrap();
        let budget = 1e-5_f64.max(primal.error_estimate + dual.error_estimate);
        assert!((dual.value - primal.value.conj()).norm() < budget, "s = {s}");
    }
}

#[test]
fn root_numbers_of_shipped_forms() {
    assert_eq!(lfun::root_number(&fixture("delta")).unwrap().value, C64::new(1.0, 0.0));
    let f = fixture("5.4.a.a");
    let r = lfun::root_number(&f).unwrap();
    assert_eq!(r.case, RootCase::TrivialSquarefree);
    let want = -(5f64).sqrt() * f.a(5).unwrap().conj();
    assert!((r.value - want).norm() < 1e-14);
    assert!((r.value.norm() - 1.0).abs() < 1e-8);
    let g = fixture("4.5.b.a");
    assert_eq!(lfun::root_number(&g).unwrap().case, RootCase::Primitive);
}

#[test]
fn functional_equation_at_the_center_is_exact() {
    let chi = DirichletCharacter::trivial(1);
    let fe = lfun::fe_residual(12, 1, &chi, None, C64::new(0.5, 0.0), None, &trunc(1e-6)).unwrap();
    assert!(fe.residual < 1e-10, "residual {}", fe.residual);
}
