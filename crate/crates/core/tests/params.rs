//! Parameter space, derived quantities and regime classification.

use isosceles::params::{regime, RegimeTag, CRITICAL_TOL, ENERGY};
use isosceles::{Error, Params};
use proptest::prelude::*;

#[test]
fn half_beta_circular_point() {
    let p = Params::from_beta_ecc(0.5, 0.0).unwrap();
    assert_eq!(p.alpha, 4.0);
    assert!((p.varpi - 2f64.sqrt()).abs() < 1e-15);
    assert_eq!(ENERGY, -1.0);
}

#[test]
fn quarter_three_fifths_point() {
    let p = Params::from_beta_ecc(0.25, 0.6).unwrap();
    assert!((p.varpi - 2.262742).abs() < 1e-6);
    assert!((p.alpha - 4.0 / 3.0).abs() < 1e-15);
    assert_eq!(p.r_minus_plus(), (0.8, 3.2));
    assert!((p.c0() - 2.75f64.sqrt()).abs() < 1e-15);
}

#[test]
fn alpha_diverges_as_beta_tends_to_one() {
    let mut last = 0.0;
    for b in [0.9, 0.99, 0.999, 0.999999] {
        let a = Params::from_beta_ecc(b, 0.1).unwrap().alpha;
        assert!(a > last);
        last = a;
    }
    assert!(last > 1e6);
}

#[test]
fn out_of_range_inputs_are_domain_errors() {
    for (b, e) in [(0.0, 0.5), (1.0, 0.5), (-0.1, 0.5), (0.5, 1.0), (0.5, -0.01), (f64::NAN, 0.2), (0.3, f64::NAN)] {
        assert!(matches!(Params::from_beta_ecc(b, e), Err(Error::Domain(_))), "({b}, {e})");
    }
}

#[test]
fn regime_examples() {
    let r = regime(&Params::from_beta_ecc(0.25, 0.6).unwrap());
    assert_eq!(r.tag, RegimeTag::Subcritical);
    assert!((r.margin + 0.5775).abs() < 1e-15);
    assert_eq!(regime(&Params::from_beta_ecc(0.6, 0.8).unwrap()).tag, RegimeTag::Critical);
    let r = Params::from_beta_ecc(0.9, 0.9).unwrap().regime();
    assert_eq!(r.tag, RegimeTag::Supercritical);
    assert!((r.margin - 0.62).abs() < 1e-15);
    // Just outside the tolerance band the sign decides.
    let e = (1.0f64 - 0.36 + 1e-9).sqrt();
    assert_eq!(regime(&Params::from_beta_ecc(0.6, e).unwrap()).tag, RegimeTag::Supercritical);
    assert!(CRITICAL_TOL < 1e-9);
    assert!(Params::from_beta_ecc(0.6, 0.8).unwrap().require_subcritical().is_err());
    assert!(Params::from_beta_ecc(0.9, 0.9).unwrap().require_supercritical().is_ok());
}

#[test]
fn json_fields() {
    let p = Params::from_beta_ecc(0.25, 0.6).unwrap();
    let v: serde_json::Value = serde_json::to_value(p).unwrap();
    for k in ["alpha", "beta", "varpi", "ecc"] {
        assert!(v.get(k).is_some(), "{k}");
    }
    assert_eq!(serde_json::from_value::<Params>(v).unwrap(), p);
}

proptest! {
    #[test]
    fn invariants_hold(beta in 1e-3f64..0.999, ecc in 0.0f64..0.999) {
        let p = Params::from_beta_ecc(beta, ecc).unwrap();
        prop_assert_eq!((p.beta, p.ecc), (beta, ecc));
        prop_assert!((p.varpi * p.varpi * beta * beta - (1.0 - ecc * ecc) / 2.0).abs() <= 1e-14);
        prop_assert!((1.0 / (1.0 + 4.0 / p.alpha) - beta).abs() <= 1e-14 * (1.0 + p.alpha));
        prop_assert!((p.four_over_alpha() - 4.0 / p.alpha).abs() <= 1e-12 * p.four_over_alpha());
        prop_assert!((p.one_plus_two_alpha() - (1.0 + 2.0 * p.alpha)).abs() <= 1e-12 * p.one_plus_two_alpha());
        let tag = p.regime().tag;
        let m = beta * beta + ecc * ecc - 1.0;
        prop_assert!(m.abs() <= CRITICAL_TOL || (m < 0.0) == (tag == RegimeTag::Subcritical));
    }
}
