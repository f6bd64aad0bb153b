//! The open book of the compact energy surface: pages, hitting maps, the
//! disk return map, mean relative winding numbers and periodic orbits.
//!
//! Page `Sigma_s` is the part of the energy surface where
//! `arg(p_z + i z) = 2 pi s`; every page projects diffeomorphically onto the
//! disk `Upsilon = {p_r^2/2 + varpi^2/(2 r^2) - 1/(beta r) <= -1}` of the
//! `(p_r, r)`-plane, whose boundary is the Euler orbit (the binding).
//!
//! Writing `(p_z, z) = varrho (cos theta, sin theta)` the page angle obeys
//! `theta' = cos^2 theta + g sin^2 theta > 0` with
//! `g = (4/alpha)(1 + 2 alpha)/(r^2 + (1 + 2 alpha) z^2)^{3/2}`, so `theta` can
//! replace time as the independent variable.  The resulting system for
//! `(p_r, r, varrho)` is smooth up to and including `varrho = 0`, which is the
//! Euler orbit: hitting maps are solutions of an ODE on the fixed interval
//! `[2 pi s_1, 2 pi s_2]`, with no event detection, and they extend smoothly
//! to the boundary of the disk.
//!
//! Along the flow the action increment is `p . dq = (p_r^2 + p_z^2) dt`, the
//! integral of the Liouville form `p_r dr + p_z dz`.  Contact forms adapted
//! to the open book differ from it by an exact form, which changes neither
//! orbit actions nor averages of the return action over the disk.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::State4;
use crate::ode::{self, Control, DenseStep, Options};
use crate::params::Params;
use crate::roots;

/// Default integration tolerance for maps between pages.
pub const DEFAULT_TOL: f64 = 1e-11;

/// A point of the closed disk `Upsilon` in coordinates `(p_r, r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskPoint {
    /// Radial momentum.
    pub p_r: f64,
    /// Radius.
    pub r: f64,
}

/// Radius `l* = sqrt(1/(varpi beta)^2 - 2)` of `Upsilon` in the coordinates `(p_r, u)`.
pub fn disk_radius(p: &Params) -> f64 {
    let m = 1.0 / (p.varpi * p.beta);
    (m * m - 2.0).max(0.0).sqrt()
}

impl DiskPoint {
    /// Constructs a point.
    pub fn new(p_r: f64, r: f64) -> Self {
        Self { p_r, r }
    }

    /// Companion coordinate `u = 1/(varpi beta) - varpi/r`; in `(p_r, u)` the
    /// disk is round, centred at the origin, with radius [`disk_radius`].
    pub fn u(&self, p: &Params) -> f64 {
        1.0 / (p.varpi * p.beta) - p.varpi / self.r
    }

    /// Point with polar coordinates `(frac * l*, angle)` in the `(p_r, u)`-plane.
    /// `frac = 1` is the boundary; the angle is the true anomaly of the Euler
    /// orbit shifted by `-pi/2`.
    pub fn from_polar(p: &Params, frac: f64, angle: f64) -> Self {
        let l = frac * disk_radius(p);
        let u = l * angle.sin();
        Self { p_r: l * angle.cos(), r: p.varpi / (1.0 / (p.varpi * p.beta) - u) }
    }

    /// Polar coordinates `(l / l*, angle)` in the `(p_r, u)`-plane.
    pub fn to_polar(&self, p: &Params) -> (f64, f64) {
        let u = self.u(p);
        (self.p_r.hypot(u) / disk_radius(p), u.atan2(self.p_r))
    }

    /// `-1 - p_r^2/2 - varpi^2/(2 r^2) + 1/(beta r) = (l*^2 - l^2)/2`: positive
    /// inside the disk, zero on the boundary.
    pub fn depth(&self, p: &Params) -> f64 {
        let l2 = self.p_r * self.p_r + self.u(p).powi(2);
        let ls = disk_radius(p);
        0.5 * (ls * ls - l2)
    }

    /// Membership in `Upsilon` up to `tol` (relative to the disk radius squared).
    pub fn contains(&self, p: &Params, tol: f64) -> bool {
        self.r > 0.0 && self.depth(p) >= -tol * disk_radius(p).powi(2)
    }

    /// Euclidean distance in the `(p_r, r)`-plane.
    pub fn dist(&self, other: &Self) -> f64 {
        (self.p_r - other.p_r).hypot(self.r - other.r)
    }

    /// Projection of a phase-space point.
    pub fn project(s: &State4) -> Self {
        Self { p_r: s.p_r, r: s.r }
    }
}

/// The centre `(0, varpi^2 beta)` of the disk (circular radius of the Euler family).
pub fn disk_center(p: &Params) -> DiskPoint {
    DiskPoint::new(0.0, p.semi_latus())
}

/// Solves the energy constraint for the amplitude `varrho >= 0` of
/// `(p_z, z) = varrho (cos 2 pi s, sin 2 pi s)` above `x`.
fn lift_amplitude(p: &Params, x: &DiskPoint, s: f64) -> Result<f64> {
    // Depths at roundoff level are the binding; the square root would
    // otherwise amplify them into amplitudes of order 1e-8.
    let d = x.depth(p);
    if d <= 8.0 * f64::EPSILON * disk_radius(p).powi(2) {
        return Ok(0.0);
    }
    let (sn, cs) = (2.0 * PI * s).sin_cos();
    let k = p.one_plus_two_alpha();
    let coef = p.four_over_alpha() * k;
    let r = x.r;
    // H + 1 = varrho^2 [cos^2/2 + coef sin^2/(r q (r + q))] - depth, q = sqrt(r^2 + k z^2).
    let g = |rho: f64| -> Result<f64> {
        let q = (r * r + k * rho * rho * sn * sn).sqrt();
        Ok(rho * rho * (0.5 * cs * cs + coef * sn * sn / (r * q * (r + q))) - d)
    };
    let mut hi = (d / (0.5 * cs * cs + coef * sn * sn / (2.0 * r * r * r))).sqrt();
    let mut n = 0;
    while g(hi)? < 0.0 {
        hi *= 2.0;
        n += 1;
        if n > 200 {
            return Err(Error::Root(format!("no amplitude on page {s} above ({}, {})", x.p_r, x.r)));
        }
    }
    roots::brent(g, 0.0, hi, 1e-16 * hi)
}

/// Lifts `x` to the phase-space point on page `Sigma_s`.
pub fn lift(p: &Params, x: &DiskPoint, s: f64) -> Result<State4> {
    let rho = lift_amplitude(p, x, s)?;
    let (sn, cs) = (2.0 * PI * s).sin_cos();
    Ok(State4::new(x.p_r, rho * cs, x.r, rho * sn))
}

/// Right-hand side in the page angle: `y = [p_r, r, varrho, t, action]`.
#[inline]
fn page_rhs(p: &Params, theta: f64, y: &[f64]) -> Result<[f64; 5]> {
    let (p_r, r, rho) = (y[0], y[1], y[2]);
    if !(r > 0.0) {
        return Err(Error::Integration(format!("r = {r} left the positive half-line")));
    }
    let (sn, cs) = theta.sin_cos();
    let k = p.one_plus_two_alpha();
    let z = rho * sn;
    let q2 = r * r + k * z * z;
    let q3 = q2 * q2.sqrt();
    let a = p.four_over_alpha();
    let g = a * k / q3;
    let thdot = cs * cs + g * sn * sn;
    let w2 = p.varpi * p.varpi;
    let dpr = w2 / (r * r * r) - 1.0 / (r * r) - a * r / q3;
    let drho = rho * (1.0 - g) * cs * sn;
    let pz = rho * cs;
    Ok([dpr / thdot, p_r / thdot, drho / thdot, 1.0 / thdot, (p_r * p_r + pz * pz) / thdot])
}

fn page_options(tol: f64) -> Options {
    Options::with_tol(tol).hmax(PI / 8.0)
}

/// Result of a hitting map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    /// Projection of the hitting point.
    pub point: DiskPoint,
    /// Amplitude `varrho = |(p_z, z)|` at the hitting point.
    pub varrho: f64,
    /// Hamiltonian transit time.
    pub time: f64,
    /// Transit action `int p_r dr + p_z dz`.
    pub action: f64,
}

fn check_point(p: &Params, x: &DiskPoint) -> Result<()> {
    p.require_subcritical()?;
    if !x.contains(p, 1e-9) {
        return Err(Error::Domain(format!("({}, {}) lies outside the disk", x.p_r, x.r)));
    }
    Ok(())
}

/// First hitting map from page `Sigma_{s1}` to page `Sigma_{s2}`, `s1 <= s2`.
pub fn hit_map(p: &Params, x: &DiskPoint, s1: f64, s2: f64, tol: f64) -> Result<Hit> {
    check_point(p, x)?;
    if !(s1 <= s2) {
        return Err(Error::Domain(format!("hitting map needs s1 <= s2, got {s1} > {s2}")));
    }
    let rho = lift_amplitude(p, x, s1)?;
    let y = advance(p, [x.p_r, x.r, rho, 0.0, 0.0], 2.0 * PI * s1, 2.0 * PI * s2, tol)?;
    Ok(Hit { point: DiskPoint::new(y[0], y[1]), varrho: y[2], time: y[3], action: y[4] })
}

fn advance(p: &Params, y0: [f64; 5], th0: f64, th1: f64, tol: f64) -> Result<[f64; 5]> {
    ode::solve(|th, y: &[f64; 5]| page_rhs(p, th, y), th0, y0, th1, &page_options(tol))
}

/// First return map `psi` of `Sigma_0` with its return action `tau`.
pub fn return_map(p: &Params, x: &DiskPoint, tol: f64) -> Result<(DiskPoint, f64)> {
    let h = hit_map(p, x, 0.0, 1.0, tol)?;
    Ok((h.point, h.action))
}

/// The map of `Upsilon` induced by the half turn `Sigma_0 -> Sigma_{1/2}`;
/// by the `z`-symmetry it coincides with the one induced by `Sigma_{1/2} -> Sigma_1`,
/// and its square is the return map.
pub fn half_return_map(p: &Params, x: &DiskPoint, tol: f64) -> Result<Hit> {
    hit_map(p, x, 0.0, 0.5, tol)
}

/// `n` iterates `psi(x), ..., psi^n(x)` with the return action of each step.
pub fn iterate(p: &Params, x: &DiskPoint, n: usize, tol: f64) -> Result<Vec<(DiskPoint, f64)>> {
    check_point(p, x)?;
    let rho = lift_amplitude(p, x, 0.0)?;
    let mut y = [x.p_r, x.r, rho, 0.0, 0.0];
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let a0 = y[4];
        y = advance(p, y, 2.0 * PI * i as f64, 2.0 * PI * (i + 1) as f64, tol)?;
        out.push((DiskPoint::new(y[0], y[1]), y[4] - a0));
    }
    Ok(out)
}

/// Jacobian of the return map by central differences with step `h`.
pub fn return_jacobian(p: &Params, x: &DiskPoint, h: f64, tol: f64) -> Result<[[f64; 2]; 2]> {
    let f = |dx: f64, dy: f64| return_map(p, &DiskPoint::new(x.p_r + dx, x.r + dy), tol).map(|r| r.0);
    let (a, b) = (f(h, 0.0)?, f(-h, 0.0)?);
    let (c, d) = (f(0.0, h)?, f(0.0, -h)?);
    Ok([
        [(a.p_r - b.p_r) / (2.0 * h), (c.p_r - d.p_r) / (2.0 * h)],
        [(a.r - b.r) / (2.0 * h), (c.r - d.r) / (2.0 * h)],
    ])
}

/// Integral of the return action over the disk, `int_Upsilon tau dp_r dr`,
/// by Gauss–Legendre in `l` and the trapezoidal rule in the angle of the
/// round coordinates `(p_r, u)` (`dp_r dr = varpi/(m - u)^2 l dl dangle`).
pub fn return_action_integral(p: &Params, n_radial: usize, n_angular: usize, tol: f64) -> Result<f64> {
    p.require_subcritical()?;
    let (xs, ws) = crate::quad::gauss_legendre(n_radial);
    let ls = disk_radius(p);
    let m = 1.0 / (p.varpi * p.beta);
    let nodes: Vec<(f64, f64, f64)> = xs
        .iter()
        .zip(&ws)
        .flat_map(|(&xi, &wi)| {
            (0..n_angular).map(move |j| (0.5 * (1.0 + xi), 0.5 * wi, 2.0 * PI * j as f64 / n_angular as f64))
        })
        .collect();
    let terms: Result<Vec<f64>> = nodes
        .par_iter()
        .map(|&(frac, w, ang)| {
            let x = DiskPoint::from_polar(p, frac, ang);
            let (_, tau) = return_map(p, &x, tol)?;
            let l = frac * ls;
            let u = l * ang.sin();
            Ok(tau * w * ls * p.varpi / ((m - u) * (m - u)) * l * 2.0 * PI / n_angular as f64)
        })
        .collect();
    Ok(terms?.iter().sum())
}

/// Tracks a continuous angle `f(state)` along the flow in the page angle over
/// `[th0, th1]`, sampling each accepted step densely enough that consecutive
/// samples differ by less than `pi/4`.  Returns the final state and the total
/// change of the angle.
fn track_angle<const N: usize, F, A>(
    f: F,
    angle: A,
    y0: [f64; N],
    th0: f64,
    th1: f64,
    tol: f64,
) -> Result<([f64; N], f64)>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
    A: Fn(&[f64; N]) -> Result<f64>,
{
    let mut last = angle(&y0)?;
    let mut total = 0.0;
    let mut failure: Option<Error> = None;
    let out = ode::integrate(f, th0, y0, th1, &page_options(tol), |step: &DenseStep<N>| {
        let mut m = 4usize;
        loop {
            let mut acc = 0.0;
            let mut prev = last;
            let mut ok = true;
            for i in 1..=m {
                let t = step.t0 + step.h * i as f64 / m as f64;
                let y = if i == m { step.y1 } else { step.eval(t) };
                let a = match angle(&y) {
                    Ok(a) => a,
                    Err(e) => {
                        failure = Some(e);
                        return Control::Stop;
                    }
                };
                let d = wrap(a - prev);
                if d.abs() > PI / 4.0 {
                    ok = false;
                    break;
                }
                acc += d;
                prev = a;
            }
            if ok || m >= 1 << 12 {
                total += acc;
                last = prev;
                return Control::Continue;
            }
            m *= 2;
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok((out.y, total))
}

fn wrap(a: f64) -> f64 {
    let mut d = a % (2.0 * PI);
    if d > PI {
        d -= 2.0 * PI;
    } else if d < -PI {
        d += 2.0 * PI;
    }
    d
}

/// Mean advance per return (in turns) of the angle of `x` about the centre
/// of the round coordinates `(p_r, u)` over `n` returns.  On the boundary this
/// is the rotation number `1/(rho_e - 1)` of the binding.
pub fn boundary_rotation(p: &Params, x: &DiskPoint, n: usize, tol: f64) -> Result<f64> {
    check_point(p, x)?;
    let rho = lift_amplitude(p, x, 0.0)?;
    let m = 1.0 / (p.varpi * p.beta);
    let vp = p.varpi;
    let angle = |y: &[f64; 5]| Ok((m - vp / y[1]).atan2(y[0]));
    let (_, total) =
        track_angle(|th, y: &[f64; 5]| page_rhs(p, th, y), angle, [x.p_r, x.r, rho, 0.0, 0.0], 0.0, 2.0 * PI * n as f64, tol)?;
    Ok(total / (2.0 * PI * n as f64))
}

/// Estimate of the mean relative winding number `w_infty(x1, x2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindingEstimate {
    /// Estimate `(theta(n) - theta(0))/n` in turns per return.
    pub value: f64,
    /// Number of returns used.
    pub n_used: usize,
    /// `|estimate(n) - estimate(n/2)|`.
    pub convergence_gap: f64,
}

fn pair_rhs(p: &Params, th: f64, y: &[f64; 6]) -> Result<[f64; 6]> {
    let a = page_rhs(p, th, &y[0..3])?;
    let b = page_rhs(p, th, &y[3..6])?;
    Ok([a[0], a[1], a[2], b[0], b[1], b[2]])
}

/// Winding of `psi_s(x1) - psi_s(x2)` over `s in [0, n]` in turns (unnormalised),
/// together with the value at `n/2` when `half` is set.
fn pair_winding(p: &Params, x1: &DiskPoint, x2: &DiskPoint, n: usize, half: bool, tol: f64) -> Result<(f64, f64)> {
    check_point(p, x1)?;
    check_point(p, x2)?;
    if x1.dist(x2) < 1e-9 {
        return Err(Error::Domain("winding of coincident points is undefined".into()));
    }
    let y0 = [x1.p_r, x1.r, lift_amplitude(p, x1, 0.0)?, x2.p_r, x2.r, lift_amplitude(p, x2, 0.0)?];
    let angle = |y: &[f64; 6]| {
        let (dx, dy) = (y[0] - y[3], y[1] - y[4]);
        if dx.hypot(dy) < 1e-9 {
            return Err(Error::Domain("points collided while computing their winding".into()));
        }
        Ok(dy.atan2(dx))
    };
    let f = |th: f64, y: &[f64; 6]| pair_rhs(p, th, y);
    let mid = if half { n / 2 } else { 0 };
    let (ym, w_half) = if mid > 0 { track_angle(f, angle, y0, 0.0, 2.0 * PI * mid as f64, tol)? } else { (y0, 0.0) };
    let (_, w_rest) = track_angle(f, angle, ym, 2.0 * PI * mid as f64, 2.0 * PI * n as f64, tol)?;
    Ok(((w_half + w_rest) / (2.0 * PI), w_half / (2.0 * PI)))
}

/// Mean relative winding number of `(x1, x2)` under the isotopy `psi_s`,
/// estimated over `n_max` returns (Birkhoff average) with the gap to the
/// estimate over `n_max / 2` returns.
pub fn mean_winding(p: &Params, x1: &DiskPoint, x2: &DiskPoint, n_max: usize, tol: f64) -> Result<WindingEstimate> {
    if n_max < 2 {
        return Err(Error::Domain("mean winding needs at least two returns".into()));
    }
    let (w, wh) = pair_winding(p, x1, x2, n_max, true, tol)?;
    let value = w / n_max as f64;
    let half = wh / (n_max / 2) as f64;
    Ok(WindingEstimate { value, n_used: n_max, convergence_gap: (value - half).abs() })
}

/// A periodic orbit of the flow other than the binding, through its
/// intersection points with `Sigma_0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitRecord {
    /// `x, psi(x), ..., psi^{k-1}(x)`.
    pub points: Vec<DiskPoint>,
    /// Prime period under `psi`; equals the linking number with the binding.
    pub k: usize,
    /// Total action `T = sum of the return actions along the orbit`.
    pub action: f64,
    /// Return actions `tau(psi^i(x))`.
    pub step_actions: Vec<f64>,
    /// `max_i |psi(points[i]) - points[i+1]|` (cyclically).
    pub residual: f64,
    /// `true` when found by symmetric (reversible) shooting.
    pub symmetric: bool,
}

/// Options for [`find_periodic_points`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    /// Integration tolerance.
    pub tol: f64,
    /// Required residual of an accepted orbit.
    pub residual_tol: f64,
    /// Points per symmetry line scanned for sign changes.
    pub line_samples: usize,
    /// Radial and angular counts of the Newton seed grid (`0` disables Newton).
    pub grid: (usize, usize),
    /// Finite-difference step of the Newton Jacobian.
    pub fd_step: f64,
    /// Newton iteration cap.
    pub max_newton: usize,
    /// Hausdorff distance under which two orbits are identified.
    pub dedup_dist: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            residual_tol: 1e-8,
            line_samples: 80,
            grid: (4, 8),
            fd_step: 1e-6,
            max_newton: 50,
            dedup_dist: 1e-5,
        }
    }
}

/// Seed grid over the open disk: `n_radial` radii (fractions of the disk
/// radius in the round coordinates) times `n_angular` angles.
pub fn seed_grid(p: &Params, n_radial: usize, n_angular: usize) -> Vec<DiskPoint> {
    let mut v = Vec::with_capacity(n_radial * n_angular);
    for i in 0..n_radial {
        let frac = (i as f64 + 0.5) / n_radial as f64 * 0.95;
        for j in 0..n_angular {
            v.push(DiskPoint::from_polar(p, frac, 2.0 * PI * (j as f64 + 0.25 * (i % 2) as f64) / n_angular as f64));
        }
    }
    v
}

/// Builds the orbit record of a candidate `k`-periodic point, or `None` when
/// its prime period is smaller than `k`, it lies on the boundary, or the
/// residual exceeds `residual_tol`.
pub fn orbit_record(p: &Params, x: &DiskPoint, k: usize, residual_tol: f64, symmetric: bool, tol: f64) -> Result<Option<OrbitRecord>> {
    if k == 0 {
        return Err(Error::Domain("period must be at least 1".into()));
    }
    if x.to_polar(p).0 > 1.0 - 1e-6 {
        return Ok(None);
    }
    let it = iterate(p, x, k, tol)?;
    let mut points = vec![*x];
    points.extend(it.iter().take(k - 1).map(|(q, _)| *q));
    let step_actions: Vec<f64> = it.iter().map(|(_, a)| *a).collect();
    let residual = it[k - 1].0.dist(x);
    if !(residual <= residual_tol) {
        return Ok(None);
    }
    let scale = disk_radius(p).max(p.semi_latus());
    for j in 1..k {
        if k % j == 0 && points[j].dist(x) < 1e-4 * scale {
            return Ok(None);
        }
    }
    let action = step_actions.iter().sum();
    Ok(Some(OrbitRecord { points, k, action, step_actions, residual, symmetric }))
}

/// Hausdorff distance between the point sets of two orbits.
pub fn hausdorff(a: &OrbitRecord, b: &OrbitRecord) -> f64 {
    let d = |u: &[DiskPoint], v: &[DiskPoint]| {
        u.iter().map(|x| v.iter().map(|y| x.dist(y)).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
    };
    d(&a.points, &b.points).max(d(&b.points, &a.points))
}

/// Symmetric `k`-periodic points: orbits through the fixed lines of the
/// reversing symmetries.  On page `Sigma_{s0}`, `s0 in {0, 1/4}`, the line
/// `p_r = 0` is fixed by a reversor; an orbit leaving it returns to it after
/// `k` half turns exactly when it is `k`-periodic and symmetric.
fn symmetric_candidates(p: &Params, k: usize, opts: &SearchOptions) -> Result<Vec<DiskPoint>> {
    let mut out = Vec::new();
    let (rm, rp) = p.r_minus_plus();
    let half_turns = 0.5 * k as f64;
    for s0 in [0.0, 0.25] {
        let shoot = |r: f64| -> Result<f64> {
            let x = DiskPoint::new(0.0, r);
            Ok(hit_map(p, &x, s0, s0 + half_turns, opts.tol)?.point.p_r)
        };
        let n = opts.line_samples.max(4);
        // Chebyshev spacing in the round coordinate u clusters samples near the
        // boundary, where the twist makes sign changes dense.
        let grid: Vec<f64> = (1..n)
            .rev()
            .map(|i| DiskPoint::from_polar(p, (PI * i as f64 / n as f64).cos(), 0.5 * PI).r.clamp(rm, rp))
            .collect();
        let vals: Vec<Result<f64>> = grid.par_iter().map(|&r| shoot(r)).collect();
        for i in 0..grid.len() - 1 {
            let (Ok(a), Ok(b)) = (&vals[i], &vals[i + 1]) else { continue };
            if a.signum() == b.signum() {
                continue;
            }
            let Ok(r) = roots::brent(shoot, grid[i], grid[i + 1], 1e-14 * rp) else { continue };
            let x = DiskPoint::new(0.0, r);
            // Transport the point on Sigma_{s0} to Sigma_0 (or Sigma_1).
            let y = if s0 == 0.0 { x } else { hit_map(p, &x, s0, 1.0, opts.tol)?.point };
            out.push(y);
        }
    }
    Ok(out)
}

fn newton(p: &Params, x0: &DiskPoint, k: usize, opts: &SearchOptions) -> Option<DiskPoint> {
    let f = |x: &DiskPoint| -> Option<[f64; 2]> {
        let y = iterate(p, x, k, opts.tol).ok()?.last()?.0;
        Some([y.p_r - x.p_r, y.r - x.r])
    };
    let mut x = *x0;
    let mut fx = f(&x)?;
    let h = opts.fd_step;
    for _ in 0..opts.max_newton {
        let norm = fx[0].hypot(fx[1]);
        if norm <= 0.1 * opts.residual_tol {
            return Some(x);
        }
        let a = f(&DiskPoint::new(x.p_r + h, x.r))?;
        let b = f(&DiskPoint::new(x.p_r - h, x.r))?;
        let c = f(&DiskPoint::new(x.p_r, x.r + h))?;
        let d = f(&DiskPoint::new(x.p_r, x.r - h))?;
        let j = [[(a[0] - b[0]) / (2.0 * h), (c[0] - d[0]) / (2.0 * h)], [(a[1] - b[1]) / (2.0 * h), (c[1] - d[1]) / (2.0 * h)]];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let dx = [-(j[1][1] * fx[0] - j[0][1] * fx[1]) / det, -(-j[1][0] * fx[0] + j[0][0] * fx[1]) / det];
        // Damped step: halve until the residual decreases.
        let mut lam = 1.0;
        loop {
            let cand = DiskPoint::new(x.p_r + lam * dx[0], x.r + lam * dx[1]);
            if cand.contains(p, 0.0) {
                if let Some(fc) = f(&cand) {
                    if fc[0].hypot(fc[1]) < norm {
                        x = cand;
                        fx = fc;
                        break;
                    }
                }
            }
            lam *= 0.5;
            if lam < 1e-4 {
                return None;
            }
        }
    }
    (fx[0].hypot(fx[1]) <= opts.residual_tol).then_some(x)
}

/// Searches `k`-periodic points of the return map: symmetric orbits by
/// shooting along the reversor lines, then general orbits by damped Newton
/// on `psi^k(x) - x` from `seeds`.  Orbits are deduplicated by Hausdorff
/// distance in a single merge phase; the binding never appears.
pub fn find_periodic_points(p: &Params, k: usize, seeds: &[DiskPoint], opts: &SearchOptions) -> Result<Vec<OrbitRecord>> {
    if k == 0 {
        return Err(Error::Domain("period must be at least 1".into()));
    }
    p.require_subcritical()?;
    let sym = symmetric_candidates(p, k, opts)?;
    let mut candidates: Vec<(DiskPoint, bool)> = sym.into_iter().map(|x| (x, true)).collect();
    let found: Vec<DiskPoint> = seeds.par_iter().filter_map(|s| newton(p, s, k, opts)).collect();
    candidates.extend(found.into_iter().map(|x| (x, false)));
    let records: Vec<OrbitRecord> = candidates
        .par_iter()
        .filter_map(|(x, symm)| orbit_record(p, x, k, opts.residual_tol, *symm, opts.tol).ok().flatten())
        .collect();
    let mut out: Vec<OrbitRecord> = Vec::new();
    for rec in records {
        if !out.iter().any(|o| hausdorff(o, &rec) < opts.dedup_dist) {
            out.push(rec);
        }
    }
    Ok(out)
}

/// Winding of a pair of periodic points over `lcm(k1, k2)` returns, where it
/// is an exact rational `N / lcm`.  Returns `(w, |N - round(N)|)`.
pub fn periodic_winding(p: &Params, x1: &DiskPoint, k1: usize, x2: &DiskPoint, k2: usize, tol: f64) -> Result<(f64, f64)> {
    let l = lcm(k1, k2);
    let (n, _) = pair_winding(p, x1, x2, l, false, tol)?;
    Ok((n / l as f64, (n - n.round()).abs()))
}

fn lcm(a: usize, b: usize) -> usize {
    use num::Integer;
    a.lcm(&b)
}

/// Linking number of two periodic orbits with its integrality residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Linking {
    /// Rounded linking number.
    pub lk: i64,
    /// `sum_{l1, l2} w_infty(psi^{l1} x1, psi^{l2} x2)` before rounding.
    pub sum: f64,
    /// `|sum - lk|`.
    pub residual: f64,
}

/// Linking number of two geometrically distinct periodic orbits, as the sum
/// of the mean relative windings over all pairs of their points.
pub fn linking_number(p: &Params, o1: &OrbitRecord, o2: &OrbitRecord, tol: f64) -> Result<Linking> {
    if hausdorff(o1, o2) < 1e-6 {
        return Err(Error::Domain("linking number of an orbit with itself".into()));
    }
    let pairs: Vec<(usize, usize)> = (0..o1.k).flat_map(|i| (0..o2.k).map(move |j| (i, j))).collect();
    let ws: Result<Vec<f64>> =
        pairs.par_iter().map(|&(i, j)| periodic_winding(p, &o1.points[i], o1.k, &o2.points[j], o2.k, tol).map(|w| w.0)).collect();
    let sum: f64 = ws?.iter().sum();
    let lk = sum.round();
    let residual = (sum - lk).abs();
    if residual > 0.05 {
        return Err(Error::Domain(format!("winding sum {sum} is not close to an integer")));
    }
    Ok(Linking { lk: lk as i64, sum, residual })
}

/// Linking number of an orbit with the binding: its number of page crossings.
pub fn linking_with_binding(o: &OrbitRecord) -> i64 {
    o.k as i64
}

/// Pairing `lk(z1, z2) vol / (T(z1) T(z2))`.
pub fn pairing(lk: i64, action1: f64, action2: f64, vol: f64) -> Result<f64> {
    if !(action1 > 0.0 && action2 > 0.0) {
        return Err(Error::Domain("pairing needs positive actions".into()));
    }
    Ok(lk as f64 * vol / (action1 * action2))
}

/// Pairing of an orbit with the binding, `k vol / (T T_e)`.
pub fn pairing_with_binding(o: &OrbitRecord, t_e: f64, vol: f64) -> Result<f64> {
    pairing(linking_with_binding(o), o.action, t_e, vol)
}

/// Outcome of [`twist_realization`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwistRealization {
    /// Target rational `num/den`.
    pub target: (i64, i64),
    /// Twist interval used for the precondition.
    pub interval: [f64; 2],
    /// Closest winding found.
    pub achieved: Option<f64>,
    /// Orbits realising [`TwistRealization::achieved`] and the point indices used.
    pub pair: Option<(OrbitRecord, usize, OrbitRecord, usize)>,
    /// `true` when `|achieved - target| <= tol`.
    pub success: bool,
    /// Every computed pair winding (for the soft check that windings of
    /// periodic pairs lie near the interval).
    pub windings: Vec<f64>,
}

/// Searches pairs of periodic points with mean relative winding `num/den`.
/// Orbits of every period up to `den` are collected and all pairs of points
/// from distinct orbits are tried.  Failure is reported, not raised.
pub fn twist_realization(
    p: &Params,
    num: i64,
    den: i64,
    interval: [f64; 2],
    tol: f64,
    opts: &SearchOptions,
) -> Result<TwistRealization> {
    if den <= 0 {
        return Err(Error::Domain("denominator must be positive".into()));
    }
    let target = num as f64 / den as f64;
    if !(interval[0] < target && target < interval[1]) {
        return Err(Error::Domain(format!("{num}/{den} is not inside ({}, {})", interval[0], interval[1])));
    }
    let seeds = if opts.grid.0 > 0 { seed_grid(p, opts.grid.0, opts.grid.1) } else { Vec::new() };
    let mut orbits: Vec<OrbitRecord> = Vec::new();
    for k in 1..=den as usize {
        for o in find_periodic_points(p, k, &seeds, opts)? {
            if !orbits.iter().any(|q| hausdorff(q, &o) < opts.dedup_dist) {
                orbits.push(o);
            }
        }
    }
    let mut jobs = Vec::new();
    for a in 0..orbits.len() {
        for b in 0..orbits.len() {
            if a == b {
                continue;
            }
            for j in 0..orbits[b].k {
                jobs.push((a, 0usize, b, j));
            }
        }
    }
    let results: Vec<(f64, (usize, usize, usize, usize))> = jobs
        .par_iter()
        .filter_map(|&(a, i, b, j)| {
            periodic_winding(p, &orbits[a].points[i], orbits[a].k, &orbits[b].points[j], orbits[b].k, opts.tol)
                .ok()
                .map(|w| (w.0, (a, i, b, j)))
        })
        .collect();
    let best = results.iter().min_by(|x, y| (x.0 - target).abs().total_cmp(&(y.0 - target).abs()));
    let windings = results.iter().map(|r| r.0).collect();
    Ok(match best {
        Some(&(w, (a, i, b, j))) => TwistRealization {
            target: (num, den),
            interval,
            achieved: Some(w),
            pair: Some((orbits[a].clone(), i, orbits[b].clone(), j)),
            success: (w - target).abs() <= tol,
            windings,
        },
        None => TwistRealization { target: (num, den), interval, achieved: None, pair: None, success: false, windings },
    })
}
