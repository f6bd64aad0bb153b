//! Acceptance suite: eleven end-to-end criteria, one PASS/FAIL line each.
//!
//! Runs as a plain binary (`harness = false`) so the report is always shown
//! by `cargo test`.  Criterion 8 is evidence-level: a miss is reported as
//! WARN with the nearest achieved value and does not fail the suite.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use isosceles::certify::blocks::build_blocks_exact;
use isosceles::certify::linalg;
use isosceles::certify::poly::{q, qi};
use isosceles::certify::{appendix_ledger, certify_q4_box, check_q4, CertifyOptions, Q};
use isosceles::hill::{
    self, default_truncation, fundamental_solution, morse_index_fourier, omega_index_and_nullity, second_derivative_at_zero,
    trace_degenerate_curve, Branch,
};
use isosceles::mcgehee::{
    self, detect_parabolic_and_brake, gap_grid, slope_at_zero, stable_manifold_graph, twist_profile, twist_region, Budget,
    McGeheeState, TwistOptions, WitnessKind,
};
use isosceles::section::{
    self, boundary_rotation, find_periodic_points, hausdorff, linking_number, periodic_winding, return_action_integral,
    return_jacobian, twist_realization, DiskPoint, OrbitRecord, SearchOptions,
};
use isosceles::{flow, volume, Params, State4};
use num::One;

#[derive(PartialEq)]
enum Verdict {
    Pass,
    Fail,
    Warn,
}

struct Report {
    verdict: Verdict,
    detail: String,
}

fn report(ok: bool, detail: String) -> Report {
    Report { verdict: if ok { Verdict::Pass } else { Verdict::Fail }, detail }
}

fn pt(b: f64, e: f64) -> Params {
    Params::from_beta_ecc(b, e).expect("valid parameters")
}

type Outcome = Result<Report, String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// 1. Rotation number of the circular Euler orbit.
fn closed_form_rotation() -> Outcome {
    let mut worst: f64 = 0.0;
    for i in 1..=9 {
        let b = i as f64 / 10.0;
        let rho = hill::rho_at(b, 0.0).map_err(err)? + 1.0;
        worst = worst.max((rho - (1.0 + (1.0 + 7.0 * b).sqrt())).abs());
    }
    Ok(report(worst <= 1e-8, format!("max |rho - (1 + sqrt(1 + 7 beta))| = {worst:.2e} over beta = 0.1..0.9")))
}

/// 2. Monotonicity in the eccentricity on a 9 x 9 subcritical grid.
fn monotonicity() -> Outcome {
    let mut worst_decrease: f64 = 0.0;
    let mut min_excess = f64::INFINITY;
    for i in 1..=9 {
        let b = i as f64 / 10.0;
        let grid: Vec<f64> = (0..=9).map(|k| k as f64 / 10.0 * (1.0 - b * b).sqrt()).collect();
        let r = hill::check_monotonicity(b, &grid).map_err(err)?;
        worst_decrease = worst_decrease.max(r.worst_decrease);
        let base = 1.0 + (1.0 + 7.0 * b).sqrt();
        for (e, rho) in &r.samples {
            if *e >= 0.1 {
                min_excess = min_excess.min(rho - base);
            }
        }
    }
    Ok(report(
        worst_decrease <= 1e-8 && min_excess > 1e-6,
        format!("largest decrease {worst_decrease:.2e}, smallest excess over the circular value {min_excess:.3e} (ecc >= 0.1)"),
    ))
}

/// 3. Degenerate-curve anchors and curvature at zero eccentricity.
fn degenerate_anchors() -> Outcome {
    let cases = [(1, 0.25, None), (1, 0.5, Some(Branch::Minus)), (1, 0.5, Some(Branch::Plus)), (2, 0.0, None)];
    let mut worst_anchor: f64 = 0.0;
    let mut worst_curv: f64 = 0.0;
    for (j, nu, br) in cases {
        let c = trace_degenerate_curve(j, nu, br, &[0.0, 0.1, 0.3], 1e-12).map_err(err)?;
        let anchor = ((j as f64 + nu).powi(2) - 1.0) / 7.0;
        worst_anchor = worst_anchor.max((c.samples[0].beta - anchor).abs());
        let target = -3.0 * anchor * (1.0 + 7.0 * anchor) / (3.0 + 28.0 * anchor);
        let d2 = second_derivative_at_zero(j, nu, br, 0.05, 1e-13).map_err(err)?;
        worst_curv = worst_curv.max((d2 / target - 1.0).abs());
    }
    Ok(report(
        worst_anchor <= 1e-6 && worst_curv <= 0.05,
        format!("anchor error {worst_anchor:.2e}, beta''(0) relative error {worst_curv:.2e} on 4 curves"),
    ))
}

/// 4. Fourier Morse index equals the ODE omega-index.
fn index_equivalence() -> Outcome {
    let vals = [0.1, 0.3, 0.5, 0.7, 0.9];
    let mut mismatches = Vec::new();
    let mut n = 0;
    for &b in &vals {
        for &e in &vals {
            let path = fundamental_solution(b, e, 1, 1e-12).map_err(err)?;
            for nu in [0.0, 0.3, 0.5] {
                let ode = omega_index_and_nullity(&path, nu).map_err(err)?.i_omega;
                let morse = morse_index_fourier(b, e, nu, default_truncation(b, e)).map_err(err)? as i64;
                n += 1;
                if ode != morse {
                    mismatches.push(format!("({b},{e},{nu}): {ode} vs {morse}"));
                }
            }
        }
    }
    Ok(report(mismatches.is_empty(), format!("{} of {n} grid points agree {}", n - mismatches.len(), mismatches.join("; "))))
}

/// 5. Comparison volume closed form and the inequality chain on a 4 x 4 grid.
fn volume_closed_form() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut min_margin = f64::INFINITY;
    for b in [0.15, 0.35, 0.55, 0.75] {
        for k in [0.2, 0.4, 0.6, 0.8] {
            let p = pt(b, k * (1.0f64 - b * b).sqrt());
            let closed = 2.0 * PI * PI * (1.0 - 2f64.sqrt() * p.varpi * b).powi(2) / (b * b * (1.0 + 7.0 * b).sqrt());
            let quad = volume::vol_quadrature_with(&p, 1e-9, volume::Integrand::Comparison).map_err(err)?;
            worst = worst.max((quad.value / closed - 1.0).abs());
            let r = volume::inequality_report(&p).map_err(err)?;
            for c in [r.volume_vs_comparison, r.comparison_vs_rotation] {
                if !c.holds {
                    min_margin = f64::NEG_INFINITY;
                }
                min_margin = min_margin.min(c.margin);
            }
        }
    }
    Ok(report(
        worst <= 1e-6 && min_margin > 0.0,
        format!("comparison quadrature relative error {worst:.2e}; smallest chain margin {min_margin:.3e}"),
    ))
}

/// 6. Area preservation, action-volume identity and boundary rotation at (0.3, 0.4).
fn return_map_properties() -> Outcome {
    let p = pt(0.3, 0.4);
    let mut worst_det: f64 = 0.0;
    for i in 0..10 {
        for j in 0..10 {
            let x = DiskPoint::from_polar(&p, 0.05 + 0.09 * i as f64 + 0.004 * j as f64, 2.0 * PI * (j as f64 + 0.3 * i as f64) / 10.0);
            let m = return_jacobian(&p, &x, 1e-6, 1e-12).map_err(err)?;
            worst_det = worst_det.max((m[0][0] * m[1][1] - m[0][1] * m[1][0] - 1.0).abs());
        }
    }
    let vol = volume::vol_quadrature(&p, 1e-10).map_err(err)?.0;
    let cal = return_action_integral(&p, 12, 24, 1e-10).map_err(err)?;
    let rel = (cal / vol - 1.0).abs();
    let rho_e = hill::euler_rotation_number(&p).map_err(err)?;
    let near = DiskPoint::from_polar(&p, 1.0 - 1e-3, 2.0);
    let advance = 2.0 * PI * boundary_rotation(&p, &near, 200, 1e-10).map_err(err)?;
    let want = 2.0 * PI / (rho_e - 1.0);
    let adv_err = (advance - want).abs();
    Ok(report(
        worst_det <= 1e-5 && rel <= 1e-3 && adv_err <= 1e-2,
        format!("max |det - 1| = {worst_det:.2e} at 100 points; action integral vs volume {rel:.2e}; boundary advance error {adv_err:.2e} rad"),
    ))
}

fn orbits_up_to(p: &Params, k_max: usize) -> Result<Vec<OrbitRecord>, String> {
    let opts = SearchOptions { grid: (0, 0), ..SearchOptions::default() };
    let mut all: Vec<OrbitRecord> = Vec::new();
    for k in 1..=k_max {
        for o in find_periodic_points(p, k, &[], &opts).map_err(err)? {
            if !all.iter().any(|q| hausdorff(q, &o) < opts.dedup_dist) {
                all.push(o);
            }
        }
    }
    Ok(all)
}

/// 7. Winding-linking identity.
fn winding_linking() -> Outcome {
    let p = pt(0.3, 0.4);
    let tol = section::DEFAULT_TOL;
    let orbits = orbits_up_to(&p, 7)?;
    let mut pairs = 0;
    let mut worst_int: f64 = 0.0;
    let mut worst_coprime: f64 = 0.0;
    let mut coprime = 0;
    for i in 0..orbits.len() {
        for j in i + 1..orbits.len() {
            let (a, b) = (&orbits[i], &orbits[j]);
            let lk = linking_number(&p, a, b, tol).map_err(err)?;
            pairs += 1;
            worst_int = worst_int.max(lk.residual);
            if num::integer::gcd(a.k, b.k) == 1 {
                coprime += 1;
                let w = periodic_winding(&p, &a.points[0], a.k, &b.points[0], b.k, tol).map_err(err)?.0;
                worst_coprime = worst_coprime.max((w - lk.lk as f64 / (a.k * b.k) as f64).abs());
            }
        }
    }
    Ok(report(
        pairs >= 3 && coprime >= 1 && worst_int <= 0.05 && worst_coprime <= 1e-3,
        format!(
            "{} orbits, {pairs} pairs: max distance of the double sum to an integer {worst_int:.2e}; {coprime} coprime pairs, max |w - lk/(k1 k2)| = {worst_coprime:.2e}",
            orbits.len()
        ),
    ))
}

/// 8. A rational inside the twist interval realised by an orbit pair (evidence level).
fn twist_interval_realisation() -> Outcome {
    let p = pt(0.3, 0.4);
    let r = volume::inequality_report(&p).map_err(err)?;
    let [lo, hi] = r.twist_interval;
    let (num, den) = (1..=12i64)
        .find_map(|d| {
            let n = (lo * d as f64).floor() as i64 + 1;
            let x = n as f64 / d as f64;
            (x > lo && x < hi).then_some((n, d))
        })
        .ok_or("no rational with denominator <= 12 inside the interval")?;
    let opts = SearchOptions { grid: (0, 0), ..SearchOptions::default() };
    let tw = twist_realization(&p, num, den, r.twist_interval, 1e-3, &opts).map_err(err)?;
    let detail = format!(
        "target {num}/{den} in ({lo:.6}, {hi:.6}); nearest achieved {:?} from {} pair windings",
        tw.achieved,
        tw.windings.len()
    );
    Ok(Report { verdict: if tw.success { Verdict::Pass } else { Verdict::Warn }, detail })
}

/// 9. McGehee suite at (0.9, 0.9).
fn mcgehee_suite() -> Outcome {
    let p = pt(0.9, 0.9);
    let xs = [1e-3, 3e-3, 1e-2, 3e-2, 0.1];
    let g = stable_manifold_graph(&p, 0.3, &xs, 1e-8).map_err(err)?;
    let slope = slope_at_zero(&g).map_err(err)?;
    let region = twist_region(&p, 0.1).map_err(err)?;
    let grid = gap_grid(&p, 0.1, 0.0, 8, 1e-9).map_err(err)?;
    let prof = twist_profile(&p, 0.1, 0.0, &grid, &TwistOptions { tol: 1e-8, max_horizon: 1e8, ..TwistOptions::default() }).map_err(err)?;
    let monotone = prof.windows(2).all(|w| w[1].theta > w[0].theta);
    let last = prof.last().ok_or("empty profile")?;
    let cat = detect_parabolic_and_brake(&p, &Budget::default()).map_err(err)?;
    let best = cat
        .witnesses
        .iter()
        .filter(|w| w.kind == WitnessKind::Brake && w.validated)
        .map(|w| w.residual)
        .fold(f64::INFINITY, f64::min);
    Ok(report(
        (slope - 1.0).abs() <= 0.05 && monotone && last.theta > 4.0 * PI && last.resolved && best <= 1e-6,
        format!(
            "slope {slope:.6}; Theta monotone = {monotone}, Theta at gap 2^-8 = {:.4e} (T = {:.3e}, rate floor {:.4}); {} witnesses, best brake residual {best:.2e}",
            last.theta,
            last.t,
            region.rate_floor,
            cat.witnesses.len()
        ),
    ))
}

/// Independent closed form of `det E` in the rational parametrisation.
fn det_e_closed(t: &Q, qq: &Q) -> Q {
    let one = Q::one();
    let r = (&one - t * t) / (&one + t * t);
    let beta = (qq * qq - &one) / qi(7);
    -(t * t) * &r * &r * (&one + &beta * qi(7)) * (qi(3) + &beta * qi(7)) / (qi(49) * &beta * &beta)
}

/// 10. Certification ledger.
fn certification() -> Outcome {
    let ledger = appendix_ledger(CertifyOptions::default()).map_err(err)?;
    let proved = ledger.iter().filter(|c| c.is_proved()).count();
    let mut det_ok = 0;
    for t in [q(1, 5), q(1, 3), q(1, 2), q(2, 3), q(4, 5)] {
        for qq in [q(3, 2), qi(2), q(5, 2), qi(3)] {
            let b = build_blocks_exact(&t, &qq).map_err(err)?;
            if linalg::det(&b.e) == det_e_closed(&t, &qq) {
                det_ok += 1;
            }
        }
    }
    let boxed = certify_q4_box(CertifyOptions::default());
    let box_ok = boxed.iter().all(|c| c.is_proved());
    let mut samples_ok = 0;
    for i in 1..=5 {
        for j in 1..=5 {
            for k in 1..=5 {
                if check_q4(&q(i, 6), &q(j, 6), &q(k, 6)).map_err(err)?.is_proved() {
                    samples_ok += 1;
                }
            }
        }
    }
    Ok(report(
        proved == ledger.len() && det_ok == 20 && box_ok && samples_ok == 125,
        format!(
            "{proved}/{} ledger entries proved; det E exact at {det_ok}/20 points; Q4 box proved = {box_ok}; Q4 negative at {samples_ok}/125 samples",
            ledger.len()
        ),
    ))
}

/// 11. Conservation, round trips, reversibility and symmetry.
fn backbone() -> Outcome {
    let mut drift: f64 = 0.0;
    for (b, e) in [(0.25, 0.6), (0.3, 0.4), (0.7, 0.5)] {
        let p = pt(b, e);
        let r = 1.2 * p.r_minus_plus().0 + 0.05;
        let k = (2.0 * (-1.0 - flow::potential(&p, r, 0.05).map_err(err)?)).sqrt();
        let s = State4::new(k * 0.6, k * 0.8, r, 0.05);
        let t_end = 50.0 * flow::euler_period(&p).max(flow::euler_time_period(&p));
        drift = drift.max(flow::integrate(&p, s, t_end, 1e-12).map_err(err)?.energy_drift);
    }
    // Round trips: disk polar coordinates, page lift/projection, McGehee chart.
    let mut round: f64 = 0.0;
    let p = pt(0.3, 0.4);
    for i in 0..20 {
        let x = DiskPoint::from_polar(&p, i as f64 / 20.0, 0.7 * i as f64);
        let (f, a) = x.to_polar(&p);
        round = round.max(DiskPoint::from_polar(&p, f, a).dist(&x) / x.r);
        let s = section::lift(&p, &x, 0.37).map_err(err)?;
        round = round.max(DiskPoint::project(&s).dist(&x) / x.r);
    }
    let sup = pt(0.9, 0.9);
    for z in [10.0, 1e3, 1e6] {
        let s = State4::new(0.3, -0.2, 0.7, z);
        let b = McGeheeState::from_state(&sup, &s).map_err(err)?.to_state(&sup).map_err(err)?;
        round = round.max((b.z / z - 1.0).abs()).max((b.r / s.r - 1.0).abs());
    }
    // Reversibility and z-symmetry of the flow, reversibility of the chart flow.
    let mut sym: f64 = 0.0;
    let p = pt(0.25, 0.6);
    let k = (2.0 * (-1.0 - flow::potential(&p, 1.5, 0.2).map_err(err)?)).sqrt();
    let s = State4::new(k * 0.3f64.cos(), k * 0.3f64.sin(), 1.5, 0.2);
    let e = flow::propagate(&p, s, 7.0, 1e-12).map_err(err)?;
    sym = sym.max(flow::propagate(&p, e.reverse_momenta(), 7.0, 1e-12).map_err(err)?.dist(&s.reverse_momenta()));
    let ez = flow::propagate(&p, s.z_reflect(), 7.0, 1e-12).map_err(err)?;
    sym = sym.max(ez.dist(&e.z_reflect()));
    let m0 = mcgehee::state_on_constraint(&sup, 0.08, 0.05, 1.1).map_err(err)?;
    let m1 = mcgehee::propagate(&sup, &m0, 40.0, 1e-12).map_err(err)?;
    let mb = mcgehee::propagate(&sup, &McGeheeState::new(m1.x, -m1.y, m1.u, -m1.v), 40.0, 1e-12).map_err(err)?;
    sym = sym.max((mb.x - m0.x).abs() + (mb.y + m0.y).abs() + (mb.u - m0.u).abs() + (mb.v + m0.v).abs());
    Ok(report(
        drift <= 1e-8 && round <= 1e-10 && sym <= 1e-8,
        format!("energy drift over 50 periods {drift:.2e}; round trips {round:.2e}; reversibility/symmetry {sym:.2e}"),
    ))
}

fn main() -> ExitCode {
    // `cargo test -- <filter>` passes arguments; this suite always runs in full
    // unless invoked with `--list` (test discovery).
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    let criteria: [(&str, fn() -> Outcome, Option<Duration>); 11] = [
        ("closed-form rotation number", closed_form_rotation, Some(Duration::from_secs(5))),
        ("monotonicity in eccentricity", monotonicity, Some(Duration::from_secs(120))),
        ("degenerate-curve anchors", degenerate_anchors, Some(Duration::from_secs(300))),
        ("index equivalence", index_equivalence, Some(Duration::from_secs(120))),
        ("volume closed form and chain", volume_closed_form, Some(Duration::from_secs(180))),
        ("return-map properties", return_map_properties, Some(Duration::from_secs(600))),
        ("winding-linking identity", winding_linking, Some(Duration::from_secs(900))),
        ("twist-interval realisation", twist_interval_realisation, None),
        ("McGehee suite", mcgehee_suite, Some(Duration::from_secs(600))),
        ("certification ledger", certification, Some(Duration::from_secs(600))),
        ("conservation and consistency", backbone, None),
    ];
    let mut failed = 0;
    for (i, (name, f, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = f();
        let el = start.elapsed();
        let over = budget.is_some_and(|b| el > b);
        let (tag, detail) = match out {
            Ok(r) if over => ("FAIL", format!("{} [over the {:?} budget]", r.detail, budget.unwrap())),
            Ok(r) => match r.verdict {
                Verdict::Pass => ("PASS", r.detail),
                Verdict::Warn => ("WARN", r.detail),
                Verdict::Fail => ("FAIL", r.detail),
            },
            Err(e) => ("FAIL", format!("error: {e}")),
        };
        if tag == "FAIL" {
            failed += 1;
        }
        println!("criterion {:>2} {tag} {name} ({:.1} s): {detail}", i + 1, el.as_secs_f64());
    }
    println!("acceptance: {} of 11 criteria failed", failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
