//! Pages, return map, winding and linking invariants of the open book.

use isosceles::ode::{self, Control, Options};
use isosceles::section::{
    boundary_rotation, disk_center, find_periodic_points, half_return_map, hausdorff, hit_map, iterate, linking_number,
    linking_with_binding, mean_winding, orbit_record, pairing, pairing_with_binding, periodic_winding, return_action_integral,
    return_jacobian, return_map, seed_grid, twist_realization, DiskPoint, OrbitRecord, SearchOptions,
};
use isosceles::{flow, hill, quad, volume, Error, Params, State4};
use proptest::prelude::*;

fn pt(b: f64, e: f64) -> Params {
    Params::from_beta_ecc(b, e).unwrap()
}

const TOL: f64 = 1e-11;

fn symmetric_only() -> SearchOptions {
    SearchOptions { grid: (0, 0), ..SearchOptions::default() }
}

/// Independent oracle for the return map: integrate Hamilton's equations in
/// time from `z = 0, p_z > 0` and stop at the next upward crossing of `z = 0`;
/// the action `int |p|^2 dt` is accumulated by 5-point Gauss–Legendre on the
/// dense output of every step.
fn oracle_return(p: &Params, x: &DiskPoint) -> (DiskPoint, f64, f64) {
    let v0 = flow::potential(p, x.r, 0.0).unwrap();
    let pz = (-2.0 - x.p_r * x.p_r - 2.0 * v0).max(0.0).sqrt();
    let s0 = State4::new(x.p_r, pz, x.r, 0.0);
    let (gx, gw) = quad::gauss_legendre(5);
    let mut action = 0.0;
    let mut hit: Option<(f64, [f64; 4])> = None;
    let speed2 = |y: &[f64; 4]| y[0] * y[0] + y[1] * y[1];
    let opts = Options::with_tol(1e-13);
    flow::integrate_with(p, s0, 1e4, &opts, |step| {
        let tc = if step.y0[3] < 0.0 && step.y1[3] >= 0.0 {
            ode::find_crossing(step, |_, y| y[3])
        } else {
            None
        };
        let t_hi = tc.unwrap_or(step.t1());
        let (a, b) = (step.t0, t_hi);
        for (xi, wi) in gx.iter().zip(&gw) {
            let t = 0.5 * (a + b) + 0.5 * (b - a) * xi;
            action += 0.5 * (b - a) * wi * speed2(&step.eval(t));
        }
        if let Some(tc) = tc {
            hit = Some((tc, step.y0));
            let _ = a;
            return Control::Stop;
        }
        Control::Continue
    })
    .unwrap();
    let (tc, _) = hit.expect("return found");
    let y = flow::propagate(p, s0, tc, 1e-13).unwrap();
    (DiskPoint::new(y.p_r, y.r), tc, action)
}

#[test]
fn identity_on_equal_pages() {
    let p = pt(0.3, 0.5);
    let x = DiskPoint::from_polar(&p, 0.4, 1.3);
    for s in [0.0, 0.2, 0.75] {
        let h = hit_map(&p, &x, s, s, TOL).unwrap();
        assert_eq!(h.point, x);
        assert_eq!(h.time, 0.0);
        assert_eq!(h.action, 0.0);
    }
}

#[test]
fn return_map_matches_time_domain_oracle() {
    for (b, e) in [(0.25, 0.6), (0.5, 0.3), (0.7, 0.5)] {
        let p = pt(b, e);
        for (frac, ang) in [(0.0, 0.0), (0.3, 0.5), (0.7, 2.5), (0.95, 4.0)] {
            let x = DiskPoint::from_polar(&p, frac, ang);
            let h = hit_map(&p, &x, 0.0, 1.0, 1e-12).unwrap();
            let (y, t, a) = oracle_return(&p, &x);
            assert!(h.point.dist(&y) < 1e-8, "({b},{e}) {x:?}: {:?} vs {y:?}", h.point);
            assert!((h.time - t).abs() < 1e-8 * t, "time {} vs {t}", h.time);
            assert!((h.action - a).abs() < 1e-7 * a, "action {} vs {a}", h.action);
        }
    }
}

#[test]
fn half_turn_maps_agree_and_compose() {
    let p = pt(0.25, 0.6);
    for (frac, ang) in [(0.0, 0.0), (0.5, 1.0), (0.9, 3.0), (1.0, 5.0)] {
        let x = DiskPoint::from_polar(&p, frac, ang);
        let a = half_return_map(&p, &x, TOL).unwrap();
        let b = hit_map(&p, &x, 0.5, 1.0, TOL).unwrap();
        assert!(a.point.dist(&b.point) < 1e-9);
        assert!((a.action - b.action).abs() < 1e-9);
        let c = hit_map(&p, &a.point, 0.5, 1.0, TOL).unwrap();
        let (y, tau) = return_map(&p, &x, TOL).unwrap();
        assert!(c.point.dist(&y) < 1e-8);
        assert!((a.action + c.action - tau).abs() < 1e-8);
    }
}

#[test]
fn hit_map_preconditions() {
    let p = pt(0.3, 0.5);
    let x = DiskPoint::from_polar(&p, 0.5, 0.0);
    assert!(matches!(hit_map(&p, &x, 0.5, 0.2, TOL), Err(Error::Domain(_))));
    let outside = DiskPoint::from_polar(&p, 1.1, 0.0);
    assert!(matches!(return_map(&p, &outside, TOL), Err(Error::Domain(_))));
    let sup = pt(0.8, 0.7);
    assert!(matches!(return_map(&sup, &DiskPoint::new(0.0, 1.0), TOL), Err(Error::Regime(_))));
}

#[test]
fn boundary_is_invariant_and_rotates_at_binding_rate() {
    for (b, e) in [(0.25, 0.6), (0.5, 0.3)] {
        let p = pt(b, e);
        let w = 1.0 / (hill::euler_rotation_number(&p).unwrap() - 1.0);
        let x = DiskPoint::from_polar(&p, 1.0, 0.3);
        let (y, _) = return_map(&p, &x, TOL).unwrap();
        // The amplitude equation is linear in varrho, so the binding is exactly invariant;
        // the remaining depth drift is integration error in (p_r, r).
        assert_eq!(hit_map(&p, &x, 0.0, 1.0, TOL).unwrap().varrho, 0.0);
        assert!(y.depth(&p).abs() < 1e-9, "boundary point left the boundary: {}", y.depth(&p));
        let rot = boundary_rotation(&p, &x, 2000, 1e-10).unwrap();
        assert!((rot - w).abs() < 1e-4, "({b},{e}): {rot} vs {w}");
        // Points within 1e-3 of the boundary follow it closely.
        let near = DiskPoint::from_polar(&p, 1.0 - 1e-3, 2.0);
        let rot = boundary_rotation(&p, &near, 50, 1e-10).unwrap();
        assert!((rot - w).abs() < 1e-2, "near boundary: {rot} vs {w}");
    }
}

#[test]
fn return_action_integrates_to_volume() {
    for (b, e) in [(0.25, 0.6), (0.6, 0.4)] {
        let p = pt(b, e);
        let vol = volume::vol_quadrature(&p, 1e-10).unwrap().0;
        let cal = return_action_integral(&p, 12, 24, 1e-10).unwrap();
        assert!(((cal - vol) / vol).abs() < 1e-3, "({b},{e}): {cal} vs {vol}");
    }
}

#[test]
fn mean_winding_with_boundary_point() {
    let p = pt(0.25, 0.6);
    let w = 1.0 / (hill::euler_rotation_number(&p).unwrap() - 1.0);
    let b = DiskPoint::from_polar(&p, 1.0, 0.3);
    for x in [disk_center(&p), DiskPoint::from_polar(&p, 0.5, 2.0)] {
        let est = mean_winding(&p, &x, &b, 2000, 1e-10).unwrap();
        assert!((est.value - w).abs() < 1e-4, "{} vs {w}", est.value);
        assert!(est.convergence_gap < 1e-3);
        assert_eq!(est.n_used, 2000);
    }
    assert!(matches!(mean_winding(&p, &b, &b, 10, TOL), Err(Error::Domain(_))));
}

fn orbits(p: &Params, k: usize) -> Vec<OrbitRecord> {
    find_periodic_points(p, k, &[], &symmetric_only()).unwrap()
}

#[test]
fn periodic_orbit_records_are_consistent() {
    let p = pt(0.25, 0.6);
    for k in [1, 3, 5] {
        let os = orbits(&p, k);
        assert!(!os.is_empty(), "no orbit of period {k}");
        for o in &os {
            assert_eq!(o.k, k);
            assert_eq!(o.points.len(), k);
            assert!(o.residual < 1e-8 && o.action > 0.0);
            // The binding never appears.
            assert!(o.points.iter().all(|x| x.to_polar(&p).0 < 1.0 - 1e-6));
            // Points are distinct and cyclically permuted by the return map.
            for i in 0..k {
                for j in 0..i {
                    assert!(o.points[i].dist(&o.points[j]) > 1e-6);
                }
                let (y, tau) = return_map(&p, &o.points[i], TOL).unwrap();
                assert!(y.dist(&o.points[(i + 1) % k]) < 1e-7);
                assert!((tau - o.step_actions[i]).abs() < 1e-8);
            }
            // Orbit action telescopes from per-return actions.
            let sum: f64 = o.points.iter().map(|x| return_map(&p, x, TOL).unwrap().1).sum();
            assert!((o.action - sum).abs() < 1e-6);
            assert_eq!(linking_with_binding(o), k as i64);
        }
    }
    // There is no orbit of prime period 2 or 4 through the symmetry lines here.
    assert!(orbits(&p, 2).is_empty());
}

#[test]
fn fixed_point_matches_oracle_and_frozen_value() {
    let p = pt(0.25, 0.6);
    let os = orbits(&p, 1);
    assert_eq!(os.len(), 1);
    let x = os[0].points[0];
    assert_eq!(x.p_r, 0.0);
    assert!((x.r - 1.855018043748).abs() < 1e-8, "{x:?}");
    let (y, _, a) = oracle_return(&p, &x);
    assert!(y.dist(&x) < 1e-8);
    assert!((a - os[0].action).abs() < 1e-7);
}

#[test]
fn near_integrable_fixed_point_near_center() {
    let p = pt(0.3, 0.05);
    let seeds = seed_grid(&p, 3, 6);
    let os = find_periodic_points(&p, 1, &seeds, &SearchOptions::default()).unwrap();
    let c = disk_center(&p);
    let near: Vec<_> = os.iter().filter(|o| o.points[0].dist(&c) < 0.05).collect();
    assert!(!near.is_empty(), "no fixed point near the centre: {os:?}");
}

#[test]
fn newton_recovers_symmetric_fixed_point() {
    let p = pt(0.25, 0.6);
    let sym = &orbits(&p, 1)[0];
    let seed = DiskPoint::new(0.05, sym.points[0].r - 0.05);
    let opts = SearchOptions { line_samples: 4, ..SearchOptions::default() };
    let found = find_periodic_points(&p, 1, &[seed], &opts).unwrap();
    assert!(found.iter().any(|o| hausdorff(o, sym) < 1e-6));
}

#[test]
fn winding_linking_identities() {
    let p = pt(0.25, 0.6);
    let fixed = &orbits(&p, 1)[0];
    let o3 = orbits(&p, 3);
    let o5 = orbits(&p, 5);
    // Coprime periods: a single pair determines the linking number.
    for o in o3.iter().chain(&o5) {
        let lk = linking_number(&p, fixed, o, TOL).unwrap();
        assert!(lk.residual < 0.05);
        let (w, res) = periodic_winding(&p, &fixed.points[0], 1, &o.points[0], o.k, TOL).unwrap();
        assert!(res < 1e-6);
        assert!((w * o.k as f64 - lk.lk as f64).abs() < 1e-6);
    }
    let lk35 = linking_number(&p, &o3[0], &o5[0], TOL).unwrap();
    for i in 0..3 {
        for j in 0..5 {
            let (w, _) = periodic_winding(&p, &o3[0].points[i], 3, &o5[0].points[j], 5, TOL).unwrap();
            assert!((15.0 * w - lk35.lk as f64).abs() < 1e-6);
        }
    }
    // Non-coprime periods: only the sum over all point pairs is an integer.
    let lk33 = linking_number(&p, &o3[0], &o3[1], TOL).unwrap();
    assert!(lk33.residual < 0.05);
    assert!(matches!(linking_number(&p, fixed, fixed, TOL), Err(Error::Domain(_))));
}

#[test]
fn pairing_values() {
    let p = pt(0.25, 0.6);
    let r = volume::inequality_report(&p).unwrap();
    let vol = r.vol_m.value;
    let mut all = orbits(&p, 1);
    all.extend(orbits(&p, 3));
    all.extend(orbits(&p, 5));
    let mut min = f64::INFINITY;
    for o in &all {
        let v = pairing_with_binding(o, r.t_e, vol).unwrap();
        assert!((v - o.k as f64 * vol / (o.action * r.t_e)).abs() < 1e-12);
        // Rescaling the contact form leaves the pairing unchanged.
        let c = 3.7;
        let scaled = pairing(o.k as i64, c * o.action, c * r.t_e, c * c * vol).unwrap();
        assert!((scaled - v).abs() < 1e-12 * v);
        min = min.min(v);
    }
    assert!(min <= 1.05, "smallest pairing with the binding: {min}");
    assert!(pairing(1, 0.0, 1.0, 1.0).is_err());
}

#[test]
fn twist_interval_rational_is_realised() {
    let p = pt(0.25, 0.6);
    let r = volume::inequality_report(&p).unwrap();
    let tw = twist_realization(&p, 3, 5, r.twist_interval, 1e-6, &symmetric_only()).unwrap();
    assert!(tw.success, "{tw:?}");
    let (o1, _, o2, _) = tw.pair.clone().unwrap();
    assert!(hausdorff(&o1, &o2) > 1e-3);
    assert!(matches!(twist_realization(&p, 1, 2, r.twist_interval, 1e-6, &symmetric_only()), Err(Error::Domain(_))));
    // Soft check: report windings of periodic pairs outside the interval.
    let [lo, hi] = r.twist_interval;
    let outside = tw.windings.iter().filter(|w| **w < lo - 1e-6 || **w > hi + 1e-6).count();
    eprintln!("{outside} of {} periodic-pair windings lie outside [{lo:.6}, {hi:.6}]", tw.windings.len());
}

#[test]
fn boundary_adjacent_rational_is_realised() {
    let p = pt(0.25, 0.6);
    let r = volume::inequality_report(&p).unwrap();
    // 4/7 = 0.5714 lies just above 1/(rho_e - 1) = 0.5686.
    let tw = twist_realization(&p, 4, 7, r.twist_interval, 1e-6, &symmetric_only()).unwrap();
    assert!(tw.success, "nearest {:?}", tw.achieved);
    let (o1, _, o2, _) = tw.pair.unwrap();
    let outer = if o1.k == 7 { &o1 } else { &o2 };
    let frac = outer.points.iter().map(|x| x.to_polar(&p).0).fold(0.0, f64::max);
    assert!(frac > 0.8, "period-7 orbit stays at {frac} of the disk radius");
}

#[test]
fn orbit_record_rejects_lower_periods() {
    let p = pt(0.25, 0.6);
    let fixed = orbits(&p, 1)[0].points[0];
    assert!(orbit_record(&p, &fixed, 3, 1e-8, true, TOL).unwrap().is_none());
    assert!(orbit_record(&p, &fixed, 1, 1e-8, true, TOL).unwrap().is_some());
    let line = serde_json::to_string(&orbits(&p, 3)[0]).unwrap();
    let back: OrbitRecord = serde_json::from_str(&line).unwrap();
    assert_eq!(back.k, 3);
}

#[test]
fn iterates_follow_return_map() {
    let p = pt(0.4, 0.5);
    let x = DiskPoint::from_polar(&p, 0.6, 1.0);
    let it = iterate(&p, &x, 3, TOL).unwrap();
    let mut y = x;
    for (q, tau) in &it {
        let (z, t) = return_map(&p, &y, TOL).unwrap();
        assert!(z.dist(q) < 1e-8 && (t - tau).abs() < 1e-8);
        y = z;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn return_map_preserves_area(frac in 0.0f64..0.97, ang in 0.0f64..6.283) {
        let p = pt(0.25, 0.6);
        let x = DiskPoint::from_polar(&p, frac, ang);
        let j = return_jacobian(&p, &x, 1e-6, 1e-12).unwrap();
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        prop_assert!((det - 1.0).abs() < 1e-5, "det = {}", det);
    }

    #[test]
    fn return_map_keeps_points_in_disk(b in 0.1f64..0.9, k in 0.1f64..0.9, frac in 0.0f64..1.0, ang in 0.0f64..6.283) {
        let p = pt(b, k * (1.0 - b * b).sqrt());
        let x = DiskPoint::from_polar(&p, frac, ang);
        let (y, tau) = return_map(&p, &x, 1e-10).unwrap();
        prop_assert!(y.contains(&p, 1e-8));
        prop_assert!(tau > 0.0);
        // The Liouville-form energy identity: tau and time are related through
        // |p|^2 = 2(-1 - V) along the arc, so tau is bounded by 2 max(-1 - V) times the time.
        let h = hit_map(&p, &x, 0.0, 1.0, 1e-10).unwrap();
        prop_assert!((h.action - tau).abs() < 1e-12);
    }
}
