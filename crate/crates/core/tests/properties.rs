//! Structural invariants checked on random inputs.

use proptest::prelude::*;
use tracelab::arith::{self, DirichletCharacter};
use tracelab::specfun;
use tracelab::C64;

fn character_strategy() -> impl Strategy<Value = DirichletCharacter> {
    (2u64..=40).prop_flat_map(|d| {
        let count = arith::build_characters(d).len();
        (Just(d), 0..count).prop_map(|(d, i)| arith::character(d, i).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn kloosterman_obeys_weil_bound(m in -200i64..200, n in -200i64..200, c in 1u64..300) {
        let s = arith::kloosterman(m, n, c);
        prop_assert!(s.abs() <= arith::weil_bound(m, n, c) + 1e-9, "S({m},{n};{c}) = {s}");
    }

    #[test]
    fn kloosterman_is_symmetric(m in -100i64..100, n in -100i64..100, c in 1u64..200) {
        prop_assert!((arith::kloosterman(m, n, c) - arith::kloosterman(n, m, c)).abs() < 1e-9);
    }

    #[test]
    fn kloosterman_absorbs_units(m in 1i64..100, n in 1i64..100, c in 2u64..200, a in 1i64..200) {
        prop_assume!(arith::gcd(a, c as i64) == 1);
        let lhs = arith::kloosterman(a * m, n, c);
        let rhs = arith::kloosterman(m, a * n, c);
        prop_assert!((lhs - rhs).abs() < 1e-9);
    }

    #[test]
    fn kloosterman_is_periodic(m in -50i64..50, n in -50i64..50, c in 1u64..100) {
        let ci = c as i64;
        prop_assert!((arith::kloosterman(m, n, c) - arith::kloosterman(m + ci, n - 3 * ci, c)).abs() < 1e-9);
    }

    #[test]
    fn twisted_kloosterman_matches_definition(chi in character_strategy(), mult in 1u64..6, m in -30i64..30, n in -30i64..30) {
        let d = chi.modulus();
        let c = d * mult;
        let got = arith::twisted_kloosterman(&chi, m, n, c).unwrap();
        let mut want = C64::new(0.0, 0.0);
        for x in 1..c as i64 {
            if arith::gcd(x, c as i64) == 1 {
                let xb = arith::mod_inverse(x, c).unwrap() as i64;
                let phase = std::f64::consts::TAU * ((m * xb + n * x) as f64 / c as f64);
                want += chi.conj_value(x) * C64::new(phase.cos(), phase.sin());
            }
        }
        prop_assert!((got - want).norm() < 1e-8, "{got} vs {want}");
    }

    #[test]
    fn twisted_kloosterman_conjugation(chi in character_strategy(), mult in 1u64..5, m in -20i64..20, n in -20i64..20) {
        // conj(S_chi(m, n; c)) = S_{conj chi}(-m, -n; c).
        let c = chi.modulus() * mult;
        let a = arith::twisted_kloosterman(&chi, m, n, c).unwrap();
        let b = arith::twisted_kloosterman(&chi.conjugate(), -m, -n, c).unwrap();
        prop_assert!((a.conj() - b).norm() < 1e-9);
    }

    #[test]
    fn characters_are_completely_multiplicative(chi in character_strategy(), a in -500i64..500, b in -500i64..500) {
        let lhs = chi.value(a * b);
        let rhs = chi.value(a) * chi.value(b);
        prop_assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn characters_are_periodic_and_unitary(chi in character_strategy(), a in -500i64..500) {
        let d = chi.modulus() as i64;
        prop_assert!((chi.value(a) - chi.value(a + 7 * d)).norm() < 1e-12);
        let v = chi.value(a);
        if arith::gcd(a, d) == 1 {
            prop_assert!((v.norm() - 1.0).abs() < 1e-12);
        } else {
            prop_assert!(v.norm() < 1e-15);
        }
    }

    #[test]
    fn primitive_gauss_sums_have_unit_modulus(chi in character_strategy()) {
        let g = arith::gauss_sum(&chi);
        if chi.is_primitive() {
            prop_assert!((g.norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn mod_inverse_inverts(x in -1000i64..1000, c in 2u64..1000) {
        match arith::mod_inverse(x, c) {
            Ok(y) => prop_assert_eq!((x.rem_euclid(c as i64) as u64 * y) % c, 1),
            Err(_) => prop_assert!(arith::gcd(x, c as i64) != 1),
        }
    }

    #[test]
    fn factorization_reconstructs(n in 1u64..1_000_000) {
        let f = arith::factorize(n);
        prop_assert_eq!(f.iter().map(|&(p, e)| p.pow(e)).product::<u64>(), n);
        prop_assert_eq!(arith::divisors(n).len() as u64, arith::divisor_count(n));
    }

    #[test]
    fn gamma_ratio_reflection(k in 4u32..30, re in -3.0f64..4.0, im in -20.0f64..20.0) {
        // R(s) R(1 - s) = 1 for R(s) = gamma_k(1 - s) / gamma_k(s).
        let s = C64::new(re, im);
        let r1 = specfun::gamma_ratio(k, s);
        let r2 = specfun::gamma_ratio(k, C64::new(1.0, 0.0) - s);
        if let (Ok(a), Ok(b)) = (r1, r2) {
            prop_assert!((a * b - 1.0).norm() < 1e-9, "{}", a * b);
        }
    }

    #[test]
    fn gamma_ratio_on_critical_line_is_unitary(k in 4u32..30, t in -30.0f64..30.0) {
        let r = specfun::gamma_ratio(k, C64::new(0.5, t)).unwrap();
        prop_assert!((r.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn bessel_three_term_recurrence(nu in 1u32..40, x in 0.1f64..200.0) {
        let a = specfun::bessel_j(nu - 1, x).unwrap();
        let b = specfun::bessel_j(nu, x).unwrap();
        let c = specfun::bessel_j(nu + 1, x).unwrap();
        let scale = a.abs().max(c.abs()).max(1e-300);
        prop_assert!((a + c - 2.0 * nu as f64 / x * b).abs() <= 1e-10 * scale.max(1e-6), "nu {nu} x {x}");
    }

    #[test]
    fn bessel_is_bounded(nu in 0u32..40, x in 0.0f64..1000.0) {
        prop_assert!(specfun::bessel_j(nu, x).unwrap().abs() <= 1.0 + 1e-12);
    }
}
