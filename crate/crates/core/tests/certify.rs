use isosceles::certify::bernstein::Bernstein;
use isosceles::certify::blocks::{beta_max, det_e_closed_form, kappa, kappa1, rational_parameters, BETA_MIN};
use isosceles::certify::ledger::{ledger_domain, ledger_polynomial, LEDGER_SHA256, LEDGER_SOURCE};
use isosceles::certify::linalg::{self, inertia_exact, inertia_f64, Inertia, Mat};
use isosceles::certify::poly::{q, q_to_f64, qi};
use isosceles::certify::q4::{d_k, q4_plus};
use isosceles::certify::*;
use isosceles::Error;
use num::{One, Signed, Zero};
use proptest::prelude::*;

fn negative_definite(m: &Mat<Q>) -> bool {
    linalg::trace(m).is_negative() && linalg::det(m).is_positive()
}

// ---------------------------------------------------------------------------
// C_n

#[test]
fn cn_vanishes_at_the_bifurcation_value() {
    assert_eq!(eval_cn(&q(5, 28), &q(1, 2), 1).unwrap(), Q::zero());
    assert_eq!(eval_cn(&q(5, 28), &q(1, 2), -2).unwrap(), Q::zero());
}

#[test]
fn cn_reflection_symmetry() {
    for (b, nu) in [(q(1, 3), q(1, 5)), (q(5, 7), q(2, 3)), (q(1, 10), q(1, 2))] {
        for n in -6..6 {
            let a = eval_cn(&b, &nu, n).unwrap();
            let m = eval_cn(&b, &(Q::one() - &nu), -n - 1).unwrap();
            assert_eq!(a, m, "n = {n}");
        }
    }
}

#[test]
fn cn_at_zero_beta_is_minus_one() {
    for n in [-4, -1, 0, 2, 5] {
        assert_eq!(eval_cn(&Q::zero(), &q(1, 3), n).unwrap(), -Q::one());
    }
}

#[test]
fn cn_pole_is_an_error() {
    assert!(matches!(eval_cn(&q(1, 2), &Q::zero(), 1), Err(Error::Pole(_))));
    assert!(matches!(eval_cn(&q(1, 2), &Q::zero(), -1), Err(Error::Pole(_))));
}

// ---------------------------------------------------------------------------
// Block reduction

/// `det E = -s²(1-e²)(1+7β)(3+7β)/(49β²)` in the rational parametrisation.
fn det_e_oracle(t: &Q, qq: &Q) -> Q {
    let one = Q::one();
    let r = (&one - t * t) / (&one + t * t);
    let beta = (qq * qq - &one) / qi(7);
    -(t * t) * &r * &r * (&one + &beta * qi(7)) * (qi(3) + &beta * qi(7)) / (qi(49) * &beta * &beta)
}

#[test]
fn det_e_matches_closed_form_exactly_at_twenty_points() {
    let ts = [q(1, 5), q(1, 3), q(1, 2), q(2, 3), q(4, 5)];
    let qs = [q(3, 2), qi(2), q(5, 2), qi(3)];
    let mut count = 0;
    for t in &ts {
        for qq in &qs {
            let b = build_blocks_exact(t, qq).unwrap();
            assert_eq!(linalg::det(&b.e), det_e_oracle(t, qq), "t = {t}, q = {qq}");
            assert_eq!(linalg::det(&b.e_hat), det_e_oracle(t, qq), "t = {t}, q = {qq}");
            count += 1;
        }
    }
    assert_eq!(count, 20);
}

#[test]
fn det_e_sample_value() {
    let b = build_blocks(0.25, 0.6).unwrap();
    assert!((b.s + 1.0 / 3.0).abs() < 1e-15);
    let d = linalg::det(&b.e);
    assert!((d + 0.303311).abs() < 1e-6, "{d}");
    assert!((det_e_closed_form(0.25, 0.6) + 3344.0 / 11025.0).abs() < 1e-14);
}

#[test]
fn kappa_is_lambda_minus_one_minus_kappa1() {
    for &beta in &[0.2f64, 0.5, 1.0, 2.0] {
        for &ecc in &[0.1f64, 0.5, 0.9] {
            let r = (1.0 - ecc * ecc).sqrt();
            let c = (1.0 + 7.0 * beta).sqrt();
            let lambda_m1 = 1.0 - r * ((c - 1.0).powi(2) - 1.0) / (7.0 * beta);
            let k = kappa(beta, ecc);
            assert!((k - (lambda_m1 - kappa1(beta, ecc))).abs() < 1e-12, "beta {beta} ecc {ecc}");
            assert!(k > 0.0);
        }
    }
}

#[test]
fn e_blocks_have_one_positive_and_one_negative_eigenvalue() {
    let mixed = Inertia { positive: 1, negative: 1, zero: 0 };
    for t in [q(1, 4), q(1, 2), q(3, 4)] {
        for qq in [q(3, 2), q(7, 4), q(5, 2)] {
            let b = build_blocks_exact(&t, &qq).unwrap();
            assert_eq!(inertia_exact(&b.e), mixed);
            assert_eq!(inertia_exact(&b.e_hat), mixed);
        }
    }
    for &beta in &[0.2, 0.6, 1.5] {
        for &ecc in &[0.05, 0.4, 0.95] {
            let b = build_blocks(beta, ecc).unwrap();
            assert_eq!(inertia_f64(&b.e).0, Some(mixed));
            assert_eq!(inertia_f64(&b.e_hat).0, Some(mixed));
        }
    }
}

#[test]
fn k_positive_definite_below_beta_max() {
    for &ecc in &[0.1, 0.3, 0.5, 0.7, 0.9] {
        let top = beta_max(ecc).min(4.0);
        for i in 0..=8 {
            let beta = BETA_MIN + (top - BETA_MIN) * i as f64 / 8.0;
            let b = build_blocks(beta, ecc).unwrap();
            let n = b.k.len();
            assert_eq!(inertia_f64(&b.k).0, Some(Inertia { positive: n, negative: 0, zero: 0 }), "beta {beta} ecc {ecc}");
        }
    }
}

#[test]
fn h_inertia_is_the_sum_of_its_blocks_and_equals_that_of_c() {
    for t in [q(1, 3), q(2, 3)] {
        for qq in [q(3, 2), qi(2), q(9, 4)] {
            let b = build_blocks_exact(&t, &qq).unwrap();
            let (ih, ie, ik, ie_hat) = (inertia_exact(&b.h), inertia_exact(&b.e), inertia_exact(&b.k), inertia_exact(&b.e_hat));
            assert_eq!(ih.positive, ie.positive + ik.positive + ie_hat.positive);
            assert_eq!(ih.negative, ie.negative + ik.negative + ie_hat.negative);
            assert_eq!(ih, inertia_exact(&b.c));
            assert!(b.first_congruence_residual().is_zero());
            assert!(b.second_congruence_residual().is_zero());
            assert!(b.comparison_gap().iter().all(|g| !g.is_negative()));
        }
    }
}

#[test]
fn boundary_value_gives_n_three() {
    let b = build_blocks(5.0 / 28.0, 0.5).unwrap();
    assert_eq!(b.n_frak, 3);
    let c = check_morse_bound(5.0 / 28.0, 0.5).unwrap();
    assert!(c.is_proved(), "{c:?}");
    assert!(c.claim.contains("at least 4"));
    let (_, beta) = rational_parameters(&q(1, 3), &q(3, 2));
    assert_eq!(beta, q(5, 28));
    let exact = build_blocks_exact(&q(1, 3), &q(3, 2)).unwrap();
    assert_eq!(exact.n_frak, 3);
    assert!(check_morse_bound_exact(&q(1, 3), &q(3, 2)).unwrap().is_proved());
}

#[test]
fn morse_bound_on_a_grid() {
    for &ecc in &[0.1, 0.4, 0.7, 0.95] {
        for i in 0..6 {
            let beta = BETA_MIN + (beta_max(ecc).min(3.0) - BETA_MIN) * i as f64 / 5.0;
            let c = check_morse_bound(beta, ecc).unwrap();
            assert!(c.is_proved(), "{c:?}");
        }
    }
    for (t, qq) in [(q(1, 5), q(5, 2)), (q(1, 2), qi(2)), (q(3, 4), q(7, 4))] {
        assert!(check_morse_bound_exact(&t, &qq).unwrap().is_proved());
    }
}

#[test]
fn block_preconditions() {
    assert!(build_blocks(0.1, 0.5).is_err());
    assert!(build_blocks(0.5, 0.0).is_err());
    assert!(build_blocks(0.5, 1.0).is_err());
    assert!(check_morse_bound(3.0, 0.9).is_err());
    assert!(build_blocks_exact(&q(1, 2), &q(5, 4)).is_err());
}

// ---------------------------------------------------------------------------
// Q4

#[test]
fn q4_negative_on_the_sample_grid() {
    for i in 1..=5 {
        for j in 1..=5 {
            for k in 1..=5 {
                let (b, e, nu) = (q(i, 6), q(j, 6), q(k, 6));
                let c = check_q4(&b, &e, &nu).unwrap();
                assert!(c.is_proved(), "{c:?}");
            }
        }
    }
}

#[test]
fn q4_sample_point() {
    let d = q4_data(&q(3, 10), &q(1, 2), &q(3, 10)).unwrap();
    assert!(d.symmetry_holds && d.d_formulas_hold && d.tr_det_formulas_hold);
    assert!(negative_definite(&d.q4_plus));
    assert!(negative_definite(&d.q4));
    assert_eq!(linalg::add(&d.q4_plus, &d.q4_plus_mirror), d.q4);
}

#[test]
fn q4_plus_blocks_negative_below_the_first_threshold() {
    for k in 1..=6 {
        let nu = q(k, 7);
        let bound = (qi(2) * &nu + &nu * &nu) / qi(7);
        let mirror = Q::one() - &nu;
        let mirror_bound = (qi(2) * &mirror + &mirror * &mirror) / qi(7);
        for j in 1..=4 {
            let beta = &bound * q(j, 4);
            assert!(eval_cn(&beta, &nu, 0).unwrap().is_negative());
            for kk in [1, 3] {
                assert!(negative_definite(&d_k(&beta, &nu, kk).unwrap()) || beta == bound);
            }
            for e in [q(1, 4), q(3, 4)] {
                assert!(negative_definite(&q4_plus(&beta, &e, &nu).unwrap()), "beta {beta} nu {nu}");
            }
            if beta < bound && beta < mirror_bound {
                for kk in [-5, -3, -1, 1, 3] {
                    assert!(negative_definite(&d_k(&beta, &nu, kk).unwrap()), "k {kk} beta {beta} nu {nu}");
                }
            }
        }
    }
}

#[test]
fn q4_domain_errors() {
    assert!(matches!(q4_data(&q(1, 2), &q(1, 2), &Q::zero()), Err(Error::Domain(_))));
    assert!(q4_data(&q(1, 2), &Q::one(), &q(1, 2)).is_err());
}

#[test]
fn trace_and_determinant_leading_terms() {
    // beta in [1/10, 2/5], nu in [1/10, 1/4]: C_1 > 0 and C_2 < 0 there, so no C_n vanishes.
    let dom = IntervalBox::closed(vec![q(1, 10), q(1, 10), q(1, 100)], vec![q(2, 5), q(1, 4), q(81, 100)]);
    let neg_tr0 = cleared_polynomial("-16*c2^2*c3^2*c4").unwrap();
    let det1 = cleared_polynomial("64*c0*c1^2*c2^2*c3^2*c4").unwrap();
    for (name, p) in [("-tr0", neg_tr0), ("det1", det1)] {
        let c = certify_positive(name, &p, &dom, CertifyOptions::default());
        assert!(c.is_proved(), "{c:?}");
    }
}

// ---------------------------------------------------------------------------
// Ledger

#[test]
fn ledger_checksum_and_entries() {
    assert_eq!(isosceles::certify::ledger::sha256_hex(LEDGER_SOURCE), LEDGER_SHA256);
    let names: Vec<String> = appendix_polynomials().unwrap().into_iter().map(|(n, _)| n).collect();
    assert_eq!(names.len(), 22);
    for n in ["I0", "I6", "J0", "J8", "K0", "K3", "I4_at_three_sevenths", "K2_at_three_sevenths"] {
        assert!(names.iter().any(|m| m == n), "{n}");
    }
}

#[test]
fn k3_has_positive_coefficients_and_is_proved_at_depth_zero() {
    let k3 = ledger_polynomial("K3").unwrap();
    assert!(k3.all_coefficients_positive());
    assert_eq!(k3.eval(&[Q::zero(), Q::zero()]), qi(7 * 31776));
    assert_eq!(k3.eval(&[Q::zero(), Q::one()]), qi(7 * (31776 + 82500 + 121005 + 82744 + 31875 + 7456 + 1020 + 64)));
    let c = certify_positive("K3", &k3, &ledger_domain("K3"), CertifyOptions::default());
    assert!(c.is_proved());
    assert_eq!(c.boxes_used, 1);
}

#[test]
fn every_ledger_polynomial_is_proved() {
    let certs = appendix_ledger(CertifyOptions::default()).unwrap();
    assert_eq!(certs.len(), 22);
    for c in &certs {
        assert!(c.is_proved(), "{c:?}");
    }
}

#[test]
fn ledger_serialises_to_json() {
    let certs = appendix_ledger(CertifyOptions::default()).unwrap();
    let json = serde_json::to_string(&certs).unwrap();
    let back: Vec<Certificate> = serde_json::from_str(&json).unwrap();
    assert_eq!(back, certs);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v[0]["status"]["status"], "proved");
}

#[test]
fn transcription_spot_checks() {
    let pts = [(q(1, 7), q(1, 3)), (q(2, 7), q(3, 5)), (q(1, 10), q(1, 2))];
    let checks = transcription_checks(&pts).unwrap();
    // The J-expansion of D42 and the split with D42 as printed do not reproduce;
    // everything else, including the split with the sign-consistent D42, is exact.
    let known = ["D42 expansion in J_i", "sign-consistent D42 expansion in J_i", "D*4 = split into D41, D42, D43"];
    for c in &checks {
        if known.contains(&c.name.as_str()) {
            assert!(!c.holds, "{} now holds; update the notes", c.name);
        } else {
            assert!(c.holds, "{c:?}");
        }
    }
    assert!(checks.iter().any(|c| c.name == "D*4 = split with sign-consistent D42" && c.holds));
    assert!(checks.len() >= 40);
}

// ---------------------------------------------------------------------------
// Positivity engine

#[test]
fn negative_polynomial_is_refuted_with_exact_witness() {
    let p = parse_poly("b - nu^2 + 1/10", &["b", "nu"]).unwrap();
    let dom = IntervalBox::closed(vec![Q::zero(), Q::zero()], vec![q(3, 7), Q::one()]).with_open(1, true, true);
    let c = certify_positive("p", &p, &dom, CertifyOptions::default());
    match c.status {
        Status::Refuted { witness, value } => {
            let x: Vec<Q> = witness.iter().map(|s| s.parse().unwrap()).collect();
            assert!(p.eval(&x).is_negative());
            assert!(x[1] > Q::zero() && x[1] < Q::one());
            assert_eq!(value.parse::<Q>().unwrap(), p.eval(&x));
        }
        s => panic!("{s:?}"),
    }
}

fn small_poly() -> impl Strategy<Value = PolyQ> {
    proptest::collection::vec((0u32..4, 0u32..4, -20i64..20), 1..8).prop_map(|terms| {
        let vars = ["x", "y"];
        let mut p = PolyQ::zero(&vars);
        for (i, j, c) in terms {
            let m = PolyQ::var(&vars, 0).pow(i).mul(&PolyQ::var(&vars, 1).pow(j)).scale(&qi(c));
            p = p.add(&m);
        }
        p
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bernstein_range_encloses_samples(p in small_poly(), lo in -3i64..3, w in 1i64..4, lo2 in -3i64..3, w2 in 1i64..4) {
        let dom = IntervalBox::closed(vec![qi(lo), qi(lo2)], vec![qi(lo + w), qi(lo2 + w2)]);
        let bern = Bernstein::from_poly(&p, &dom);
        let (min, max) = bern.range();
        for i in 0..=6 {
            for j in 0..=6 {
                let x = vec![qi(lo) + q(w * i, 6), qi(lo2) + q(w2 * j, 6)];
                let v = p.eval(&x);
                prop_assert!(min <= v && v <= max);
            }
        }
        let (a, b) = bern.split(0);
        let (da, db) = dom.split(0);
        prop_assert_eq!(a.coefficients(), Bernstein::from_poly(&p, &da).coefficients());
        prop_assert_eq!(b.coefficients(), Bernstein::from_poly(&p, &db).coefficients());
    }

    #[test]
    fn certificates_agree_with_sampling(p in small_poly(), shift in 0i64..60) {
        let p = p.add(&PolyQ::constant(&["x", "y"], qi(shift)));
        let dom = IntervalBox::closed(vec![Q::zero(), Q::zero()], vec![Q::one(), Q::one()]);
        let c = certify_positive("p", &p, &dom, CertifyOptions { max_depth: 10, blow_up: true });
        let samples: Vec<Q> = (0..=8).flat_map(|i| (0..=8).map(move |j| (i, j))).map(|(i, j)| p.eval(&[q(i, 8), q(j, 8)])).collect();
        match &c.status {
            Status::Proved => prop_assert!(samples.iter().all(|v| v.is_positive())),
            Status::Refuted { witness, .. } => {
                let x: Vec<Q> = witness.iter().map(|s| s.parse().unwrap()).collect();
                prop_assert!(!p.eval(&x).is_positive());
            }
            Status::Inconclusive { .. } => {}
        }
    }

    #[test]
    fn cn_symmetry_holds_for_random_rationals(bn in 1i64..50, nun in 1i64..49, n in -6i64..6) {
        let beta = q(bn, 50);
        let nu = q(nun, 49);
        prop_assert_eq!(eval_cn(&beta, &nu, n).unwrap(), eval_cn(&beta, &(Q::one() - &nu), -n - 1).unwrap());
    }
}

#[test]
fn sample_values_are_consistent_with_floats() {
    let c = eval_cn(&q(3, 10), &q(1, 4), 2).unwrap();
    let f = 7.0 * 0.3 / (2.25f64.powi(2) - 1.0) - 1.0;
    assert!((q_to_f64(&c) - f).abs() < 1e-15);
}
