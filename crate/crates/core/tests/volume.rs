//! Contact-volume closed forms, quadrature and the derived inequality chain.

use std::f64::consts::PI;

use isosceles::volume::{
    critical_volume_cap, inequality_report, inequality_report_with, potential_comparison, sweep, vol_comparison,
    vol_quadrature, vol_quadrature_with, vol_upper_bound, write_sweep_csv, Integrand, ReportOptions, VolumeReport,
};
use isosceles::{flow, quad, Error, Params};
use proptest::prelude::*;

fn pt(b: f64, e: f64) -> Params {
    Params::from_beta_ecc(b, e).unwrap()
}

/// 4 x 4 subcritical grid: beta in {0.15, 0.35, 0.55, 0.75}, ecc a fraction of sqrt(1 - beta^2).
fn grid() -> Vec<Params> {
    let mut v = Vec::new();
    for b in [0.15, 0.35, 0.55, 0.75] {
        for k in [0.2, 0.4, 0.6, 0.8] {
            v.push(pt(b, k * (1.0f64 - b * b).sqrt()));
        }
    }
    v
}

/// Independent oracle: the volume in elliptic polar coordinates
/// `r = rho cos(phi)`, `z = rho sin(phi)/sqrt(1 + 2 alpha)`, where the radial
/// integral is elementary.  With `B = 1/cos(phi) + 4/alpha` the Hill region
/// in `rho` is the interval between the roots of `rho^2 - B rho + varpi^2/(2 cos^2 phi)`,
/// and the radial integral of `-rho - varpi^2/(2 rho cos^2) + B` is
/// `B sqrt(B^2 - 2 varpi^2/cos^2)/2 - varpi^2/(2 cos^2) ln(rho_+/rho_-)`.
fn polar_volume(p: &Params) -> f64 {
    let a = (1.0 - p.beta) / p.beta;
    let k = (1.0 + 7.0 * p.beta) / (1.0 - p.beta);
    let w2 = p.varpi * p.varpi;
    let phi_max = ((2.0 * w2).sqrt() - 1.0) / a;
    let phi_max = phi_max.acos();
    let g = |phi: f64| {
        let c = phi.cos();
        let b = 1.0 / c + a;
        let disc = (b * b - 2.0 * w2 / (c * c)).max(0.0);
        let sd = disc.sqrt();
        let (rp, rm) = (0.5 * (b + sd), 0.5 * (b - sd));
        0.5 * b * sd - w2 / (2.0 * c * c) * (rp / rm).ln()
    };
    8.0 * PI / k.sqrt() * quad::integrate(g, 0.0, phi_max, 0.0, 1e-12).unwrap().value
}

#[test]
fn closed_forms_at_quarter_three_fifths() {
    let p = pt(0.25, 0.6);
    let t = flow::euler_period(&p);
    assert!((t - 3.554306).abs() < 5e-7, "T_e = {t}");
    let v2 = vol_comparison(&p).unwrap();
    // T_e^2 / sqrt(2.75) = 7.6180421; the quoted value 7.61807 is rounded.
    assert!((v2 - 7.61807).abs() < 5e-5, "vol_M2 = {v2}");
    assert!((v2 - t * t / 2.75f64.sqrt()).abs() < 1e-12);
    assert!((v2 - 7.618042095163).abs() < 1e-11);
}

#[test]
fn comparison_volume_vanishes_with_eccentricity() {
    let mut last = f64::INFINITY;
    for e in [1e-1, 1e-2, 1e-3, 1e-4] {
        let v = vol_comparison(&pt(0.4, e)).unwrap();
        assert!(v < last);
        last = v;
    }
    assert!(last < 1e-13);
}

#[test]
fn comparison_quadrature_matches_closed_form() {
    for p in grid() {
        let q = vol_quadrature_with(&p, 1e-9, Integrand::Comparison).unwrap();
        let c = vol_comparison(&p).unwrap();
        assert!(((q.value - c) / c).abs() < 1e-6, "beta {} ecc {}: {} vs {c}", p.beta, p.ecc, q.value);
        assert!(q.error <= 1e-9 * q.value);
    }
}

#[test]
fn quadrature_matches_polar_oracle() {
    for p in grid() {
        let (v, err) = vol_quadrature(&p, 1e-10).unwrap();
        let o = polar_volume(&p);
        assert!(((v - o) / o).abs() < 1e-8, "beta {} ecc {}: {v} vs {o}", p.beta, p.ecc);
        assert!(err <= 1e-10 * v);
    }
}

#[test]
fn polar_oracle_reproduces_frozen_value() {
    // Frozen from the polar oracle at (1/4, 3/5).
    let o = polar_volume(&pt(0.25, 0.6));
    assert!((o - 7.856228415889).abs() < 1e-9, "{o}");
    let (v, _) = vol_quadrature(&pt(0.25, 0.6), 1e-10).unwrap();
    assert!((v - 7.856228415889).abs() < 1e-8);
    assert!(v > 7.61807);
}

#[test]
fn volume_exceeds_comparison_on_grid() {
    for p in grid() {
        let (v, err) = vol_quadrature(&p, 1e-9).unwrap();
        let c = vol_comparison(&p).unwrap();
        assert!(v - c > err, "beta {} ecc {}: margin {}", p.beta, p.ecc, v - c);
    }
}

#[test]
fn volume_increases_in_ecc_squared() {
    for b in [0.2, 0.5, 0.8] {
        let emax = (1.0f64 - b * b).sqrt();
        let vols: Vec<f64> = (1..=5).map(|k| vol_quadrature(&pt(b, emax * k as f64 / 6.0), 1e-9).unwrap().0).collect();
        assert!(vols.windows(2).all(|w| w[1] > w[0]), "beta {b}: {vols:?}");
    }
}

#[test]
fn volume_increases_along_fixed_angular_momentum() {
    let varpi: f64 = 0.8;
    let mut last = 0.0;
    let mut first = None;
    for k in 1..=8 {
        let th = PI / 2.0 * k as f64 / 9.0;
        let p = pt(th.cos() / (2f64.sqrt() * varpi), th.sin());
        assert!((p.varpi - varpi).abs() < 1e-12);
        let (v, _) = vol_quadrature(&p, 1e-9).unwrap();
        assert!(v > last, "theta {th}: {v} <= {last}");
        first.get_or_insert(v);
        last = v;
    }
    // Small angles shrink the surface to the minimum of the potential.
    let p = pt(0.01f64.cos() / (2f64.sqrt() * varpi), 0.01f64.sin());
    let v = vol_quadrature(&p, 1e-9).unwrap().0;
    assert!(v < 1e-6 && v < first.unwrap());
}

#[test]
fn volume_below_polar_bounds_up_to_critical() {
    for p in grid() {
        let (v, _) = vol_quadrature(&p, 1e-9).unwrap();
        assert!(v < vol_upper_bound(&p).unwrap());
    }
    for b in [0.25f64, 0.5, 0.75] {
        let cap = critical_volume_cap(b);
        let mut last = 0.0;
        for m in [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6] {
            let p = pt(b, (1.0 - b * b - m).sqrt());
            let (v, err) = vol_quadrature(&p, 1e-8).unwrap();
            assert!(v + err < cap * (1.0 + 1e-6), "beta {b} margin {m}: {v} vs cap {cap}");
            assert!(v + err < vol_upper_bound(&p).unwrap());
            assert!(v > last);
            last = v;
        }
    }
}

#[test]
fn inequality_chain_at_quarter_three_fifths() {
    let r = inequality_report(&pt(0.25, 0.6)).unwrap();
    assert!(r.volume_vs_comparison.holds && r.comparison_vs_rotation.holds && r.systolic_bound.holds);
    assert!(r.vol_m.value > r.t_e * r.t_e / r.c0);
    assert!(r.t_e * r.t_e / r.c0 > r.t_e * r.t_e / (r.rho_e - 1.0));
    let [lo, hi] = r.twist_interval;
    assert!(lo < 1.0 / r.c0 && 1.0 / r.c0 < hi);
    assert!(r.systolic_proxy < r.c0 && r.c0 < 2.0 * 2f64.sqrt());
    assert!(r.warnings.is_empty());
}

#[test]
fn twist_interval_nonempty_on_grid() {
    for p in grid() {
        let r = inequality_report(&p).unwrap();
        let [lo, hi] = r.twist_interval;
        assert!(lo < 1.0 / r.c0 && 1.0 / r.c0 < hi, "beta {} ecc {}: [{lo}, {hi}]", p.beta, p.ecc);
        assert!(r.volume_vs_comparison.holds && r.comparison_vs_rotation.holds);
    }
}

#[test]
fn twist_interval_collapses_at_three_sevenths() {
    let mut last_width = f64::INFINITY;
    for e in [0.2, 0.1, 0.05, 0.02] {
        let r = inequality_report(&pt(3.0 / 7.0, e)).unwrap();
        let [lo, hi] = r.twist_interval;
        assert!(lo < 0.5 && 0.5 < hi);
        let width = hi - lo;
        assert!(width < last_width);
        last_width = width;
    }
    assert!(last_width < 1e-3, "{last_width}");
}

#[test]
fn weyl_curve_and_json() {
    let opts = ReportOptions { tol: 1e-9, weyl_k_max: 4, weyl_eps: 0.5 };
    let r = inequality_report_with(&pt(0.3, 0.4), &opts).unwrap();
    assert_eq!(r.weyl_curve.len(), 4);
    for w in &r.weyl_curve {
        assert!((w.bound - (r.vol_m.value - 0.5) * (2.0 * w.k as f64).sqrt()).abs() < 1e-12);
    }
    let s = serde_json::to_string(&r).unwrap();
    assert!(s.contains("\"T_e\""));
    let back: VolumeReport = serde_json::from_str(&s).unwrap();
    assert_eq!(back, r);
}

#[test]
fn near_critical_points_are_flagged() {
    let r = inequality_report(&pt(0.5, 0.86)).unwrap();
    assert_eq!(r.warnings.len(), 1);
    assert!(r.volume_vs_comparison.holds);
}

#[test]
fn sweep_skips_non_subcritical_points() {
    let rows = sweep(&[(0.3, 0.4), (0.8, 0.7), (0.5, 0.5)], 1e-8).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.i_left < r.i_right));
    let mut buf = Vec::new();
    write_sweep_csv(&rows, &mut buf).unwrap();
    let s = String::from_utf8(buf).unwrap();
    assert!(s.starts_with("beta,ecc,T,vol_M2,vol_M,rho,I_left,I_right\n"));
    assert_eq!(s.lines().count(), 3);
}

#[test]
fn regime_errors_propagate() {
    let p = pt(0.8, 0.7);
    assert!(matches!(inequality_report(&p), Err(Error::Regime(_))));
    assert!(matches!(vol_upper_bound(&p), Err(Error::Regime(_))));
    assert!(matches!(vol_quadrature(&pt(0.3, 0.4), 0.0), Err(Error::Domain(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn comparison_identity(b in 0.02f64..0.98, k in 0.01f64..0.99) {
        let p = pt(b, k * (1.0 - b * b).sqrt());
        let t = flow::euler_period(&p);
        let v2 = vol_comparison(&p).unwrap();
        prop_assert!((v2 * p.c0() - t * t).abs() <= 1e-12 * (t * t).max(1.0));
    }

    #[test]
    fn comparison_potential_dominates(b in 0.05f64..0.95, k in 0.05f64..0.95, u in 0.0f64..1.0, h in 0.0f64..1.0) {
        let p = pt(b, k * (1.0 - b * b).sqrt());
        let (rm, rp) = p.r_minus_plus();
        let r = rm + u * (rp - rm);
        let zp = flow::hill_region(&p).z_plus(r).unwrap();
        let z = h * zp;
        prop_assert!(potential_comparison(&p, r, z) >= flow::potential(&p, r, z).unwrap() - 1e-12);
    }
}
