//! Supercritical dynamics near `z = +/- infinity`: McGehee coordinates, the
//! sphere and periodic orbit at infinity, escape classification, the stable
//! manifold of the orbit at infinity, the twist near it, and a catalogue of
//! brake and parabolic trajectories.
//!
//! In the upper chart
//! `(x, y, u, v) = ((8/(alpha sqrt(1 + 2 alpha) z))^{1/2}, p_z, varpi/r - 1/varpi, p_r)`
//! with the time change `dt/dtau = K = 16/(alpha sqrt(1 + 2 alpha))`, the
//! set `x = 0` is invariant and carries the periodic orbit
//! `zeta_inf = {x = y = 0, u^2 + v^2 = rho_inf^2}`.
//!
//! Escape is decided with the *far-field energy* `E = p_z^2 - c/|z|`
//! (`c = 8/(alpha sqrt(1 + 2 alpha))`, so `E = y^2 - x^2` in the chart).
//! While the motion is outgoing `E` never decreases, and its total future
//! increase is at most `c r_+^2 / (2 (1 + 2 alpha) |z|^3)`.  Hence `E > 0`
//! certifies escape, `E < -bound` certifies return, and only a band around
//! the stable manifold needs further integration.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{self, State4};
use crate::ode::{self, Control, Options};
use crate::params::Params;
use crate::roots;

/// Default integration tolerance.
pub const DEFAULT_TOL: f64 = 1e-11;

/// Default classification horizon in physical time units (the chart
/// classification converts it to McGehee time `horizon / K`).
pub const DEFAULT_HORIZON: f64 = 1e4;

/// A point in McGehee coordinates (upper chart, `z > 0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McGeheeState {
    /// `(8/(alpha sqrt(1 + 2 alpha) z))^{1/2} >= 0`; `x = 0` is infinity.
    pub x: f64,
    /// `p_z`.
    pub y: f64,
    /// `varpi/r - 1/varpi`.
    pub u: f64,
    /// `p_r`.
    pub v: f64,
}

/// Time-reversal direction for classifications.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// Increasing time.
    Forward,
    /// Decreasing time.
    Backward,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

/// `c = 8/(alpha sqrt(1 + 2 alpha))`, so that `x^2 = c / z`.
pub fn far_field_coefficient(p: &Params) -> f64 {
    2.0 * p.four_over_alpha() / p.one_plus_two_alpha().sqrt()
}

/// The time change `K = dt/dtau = 16/(alpha sqrt(1 + 2 alpha))`.
pub fn time_scale(p: &Params) -> f64 {
    2.0 * far_field_coefficient(p)
}

/// `r(u) = varpi^2/(1 + u varpi)`.
pub fn radius_of_u(p: &Params, u: f64) -> Result<f64> {
    let d = 1.0 + u * p.varpi;
    if !(d > 0.0) {
        return Err(Error::Domain(format!("1 + u varpi = {d} must be positive")));
    }
    Ok(p.varpi * p.varpi / d)
}

impl McGeheeState {
    /// Constructs a state.
    pub fn new(x: f64, y: f64, u: f64, v: f64) -> Self {
        Self { x, y, u, v }
    }

    /// Polar radius `rho = |(u, v)|`.
    pub fn rho(&self) -> f64 {
        self.u.hypot(self.v)
    }

    /// Polar angle `theta = arg(u + i v)`.
    pub fn theta(&self) -> f64 {
        self.v.atan2(self.u)
    }

    /// The radius `r`.
    pub fn r(&self, p: &Params) -> Result<f64> {
        radius_of_u(p, self.u)
    }

    /// Chart image of a phase-space point with `z > 0`.
    pub fn from_state(p: &Params, s: &State4) -> Result<Self> {
        if !(s.z > 0.0) || !(s.r > 0.0) {
            return Err(Error::Domain(format!("McGehee chart needs z > 0 and r > 0, got z = {}, r = {}", s.z, s.r)));
        }
        let x = (far_field_coefficient(p) / s.z).sqrt();
        Ok(Self { x, y: s.p_z, u: p.varpi / s.r - 1.0 / p.varpi, v: s.p_r })
    }

    /// Phase-space point of a chart state with `x > 0`.
    pub fn to_state(&self, p: &Params) -> Result<State4> {
        if !(self.x > 0.0) {
            return Err(Error::Domain(format!("x = {} is not a finite point", self.x)));
        }
        let z = far_field_coefficient(p) / (self.x * self.x);
        Ok(State4::new(self.v, self.y, self.r(p)?, z))
    }

    fn to_array(self) -> [f64; 4] {
        [self.x, self.y, self.u, self.v]
    }

    fn from_array(a: &[f64]) -> Self {
        Self { x: a[0], y: a[1], u: a[2], v: a[3] }
    }
}

#[inline]
fn rhs_array(p: &Params, y: &[f64]) -> Result<[f64; 4]> {
    let (x, yy, u, v) = (y[0], y[1], y[2], y[3]);
    if x < 0.0 {
        return Err(Error::Domain(format!("x = {x} must be non-negative")));
    }
    let r = radius_of_u(p, u)?;
    let k = p.one_plus_two_alpha();
    let alpha = 4.0 / p.four_over_alpha();
    let kk = time_scale(p);
    let x2 = x * x;
    let x4 = x2 * x2;
    let s = alpha * alpha / 64.0 * r * r * x4 + 1.0;
    let f = 1.0 / (s * s.sqrt());
    let rot = p.varpi * kk / (r * r);
    Ok([-x2 * x * yy, -f * x4, -rot * v, rot * u - f * alpha * r * x4 * x2 / (8.0 * k.sqrt())])
}

/// The McGehee vector field `d(x, y, u, v)/dtau`, including the time change.
pub fn mcgehee_rhs(p: &Params, s: &McGeheeState) -> Result<McGeheeState> {
    Ok(McGeheeState::from_array(&rhs_array(p, &s.to_array())?))
}

/// Flows a chart state for McGehee time `tau` (either sign).
pub fn propagate(p: &Params, s: &McGeheeState, tau: f64, tol: f64) -> Result<McGeheeState> {
    let y = ode::solve(|_t, y| rhs_array(p, y), 0.0, s.to_array(), tau, &chart_options(tol))?;
    Ok(McGeheeState::from_array(&y))
}

/// `g_x(rho, theta) = rho_inf^2 - x^2 (1 - (alpha^2 r^2 x^4/64 + 1)^{-1/2})`.
fn g_x(p: &Params, x: f64, rho: f64, theta: f64) -> Result<f64> {
    let r = radius_of_u(p, rho * theta.cos())?;
    let alpha = 4.0 / p.four_over_alpha();
    let s = alpha * alpha / 64.0 * r * r * x.powi(4) + 1.0;
    Ok(rho_inf_sq(p) - x * x * (1.0 - 1.0 / s.sqrt()))
}

fn rho_inf_sq(p: &Params) -> f64 {
    let w2 = p.varpi * p.varpi;
    (1.0 - 2.0 * w2) / w2
}

/// Residual of the energy constraint `H = -1` in the chart,
/// `(y^2 + u^2 + v^2)/2 - 1/(2 varpi^2) - x^2/(2 sqrt(alpha^2 r^2 x^4/64 + 1)) + 1`.
pub fn constraint_residual(p: &Params, s: &McGeheeState) -> Result<f64> {
    let r = s.r(p)?;
    let alpha = 4.0 / p.four_over_alpha();
    let q = (alpha * alpha / 64.0 * r * r * s.x.powi(4) + 1.0).sqrt();
    Ok(0.5 * (s.y * s.y + s.u * s.u + s.v * s.v) - 0.5 / (p.varpi * p.varpi) - 0.5 * s.x * s.x / q + 1.0)
}

/// Radius `rho_inf = sqrt(1 - 2 varpi^2)/varpi` of the periodic orbit at infinity.
pub fn infinity_orbit(p: &Params) -> Result<f64> {
    p.require_supercritical()?;
    Ok(rho_inf_sq(p).sqrt())
}

/// Largest admissible chart radius for manifold and twist computations,
/// `0.1 min(1, rho_inf)`.
pub fn manifold_delta(p: &Params) -> Result<f64> {
    Ok(0.1 * infinity_orbit(p)?.min(1.0))
}

/// Solves the energy constraint for `rho` given `(x, y, theta)`.
pub fn radius_on_constraint(p: &Params, x: f64, y: f64, theta: f64) -> Result<f64> {
    p.require_supercritical()?;
    let h = |rho: f64| g_x(p, x, rho, theta).map(|g| rho * rho + y * y - x * x - g);
    let hi = (rho_inf_sq(p) + x * x - y * y).max(0.0).sqrt();
    let h0 = h(0.0)?;
    if h0 > 0.0 {
        return Err(Error::Domain(format!("no point of the energy surface with x = {x}, y = {y}")));
    }
    if h0 == 0.0 {
        return Ok(0.0);
    }
    let mut hi = hi.max(1e-300);
    while h(hi)? < 0.0 {
        hi *= 1.0 + 1e-6;
    }
    roots::brent(h, 0.0, hi, 1e-15 * hi)
}

/// The chart state with `(x, y)` and `(u, v)` at polar angle `theta` on the energy surface.
pub fn state_on_constraint(p: &Params, x: f64, y: f64, theta: f64) -> Result<McGeheeState> {
    let rho = radius_on_constraint(p, x, y, theta)?;
    Ok(McGeheeState::new(x, y, rho * theta.cos(), rho * theta.sin()))
}

/// Outcome of an escape classification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Outcome {
    /// Converges to `z = +infinity`.
    EscapesUp,
    /// Converges to `z = -infinity`.
    EscapesDown,
    /// The outgoing velocity changes sign and the orbit comes back.
    Returns,
    /// Undecided while within `tol` (in `p_z`) of the stable manifold.
    Parabolic(f64),
}

/// Classification with the time at which it was decided.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EscapeClassification {
    /// The outcome.
    pub outcome: Outcome,
    /// Time (McGehee time for chart states, physical time otherwise) of the decision.
    pub witness_time: f64,
}

/// Decision rule shared by the chart and the physical classification.
/// `w` is the outgoing velocity, `e` the far-field energy and `band` the bound
/// on its future increase.
fn decide(w: f64, e: f64, band: f64, up: bool, tol: f64) -> Option<Outcome> {
    if !(w > 0.0) {
        return None;
    }
    if e > 0.0 {
        return Some(if up { Outcome::EscapesUp } else { Outcome::EscapesDown });
    }
    if e < -band {
        return Some(Outcome::Returns);
    }
    if band / (2.0 * w) <= tol {
        return Some(Outcome::Parabolic(tol));
    }
    None
}

/// Bound on the future increase of `E = y^2 - x^2` along an outgoing chart orbit.
fn chart_band(p: &Params, x: f64) -> f64 {
    let rp = p.r_minus_plus().1;
    let c = far_field_coefficient(p);
    rp * rp * x.powi(6) / (2.0 * p.one_plus_two_alpha() * c * c)
}

fn chart_options(tol: f64) -> Options {
    Options::with_tol(tol).max_steps(usize::MAX)
}

/// Classifies the orbit of a chart state in the given time direction:
/// escape to `x = 0`, return (the outgoing velocity `+/- y` changes sign), or
/// parabolic within `tol`.  Errors with [`Error::EventNotFound`] after
/// `horizon` units of McGehee time.
pub fn classify(p: &Params, s: &McGeheeState, dir: Direction, tol: f64, horizon: f64) -> Result<EscapeClassification> {
    p.require_supercritical()?;
    let sg = dir.sign();
    if !(sg * s.y > 0.0) {
        return Ok(EscapeClassification { outcome: Outcome::Returns, witness_time: 0.0 });
    }
    let mut found: Option<EscapeClassification> = None;
    let check = |t: f64, y: &[f64; 4]| -> Option<EscapeClassification> {
        let w = sg * y[1];
        if !(w > 0.0) {
            return Some(EscapeClassification { outcome: Outcome::Returns, witness_time: t });
        }
        let e = y[1] * y[1] - y[0] * y[0];
        decide(w, e, chart_band(p, y[0]), true, tol).map(|outcome| EscapeClassification { outcome, witness_time: t })
    };
    if let Some(c) = check(0.0, &s.to_array()) {
        return Ok(c);
    }
    let out = ode::integrate(|_t, y| rhs_array(p, y), 0.0, s.to_array(), sg * horizon, &chart_options(DEFAULT_TOL), |st| {
        found = check(st.t1(), &st.y1);
        if found.is_some() {
            Control::Stop
        } else {
            Control::Continue
        }
    })?;
    found.ok_or_else(|| Error::EventNotFound(format!("classification unresolved after McGehee time {}", out.t.abs())))
}

/// Classifies the orbit of a phase-space point in the given time direction.
/// The first excursion away from `z = 0` decides: escape up or down,
/// return, or parabolic within `tol`.  `horizon` is physical time.
pub fn classify_state(p: &Params, s: &State4, dir: Direction, tol: f64, horizon: f64) -> Result<EscapeClassification> {
    p.require_supercritical()?;
    let sg = dir.sign();
    let c = far_field_coefficient(p);
    let k = p.one_plus_two_alpha();
    let rp = p.r_minus_plus().1;
    let mut outgoing = false;
    let mut found: Option<EscapeClassification> = None;
    let mut check = |t: f64, y: &[f64; 4]| -> Option<EscapeClassification> {
        let (pz, z) = (y[1], y[3]);
        let w = sg * pz * z.signum();
        if z == 0.0 {
            return None;
        }
        if w > 0.0 {
            outgoing = true;
        } else if outgoing {
            return Some(EscapeClassification { outcome: Outcome::Returns, witness_time: t });
        } else {
            return None;
        }
        let az = z.abs();
        let e = pz * pz - c / az;
        let band = c * rp * rp / (2.0 * k * az * az * az);
        decide(w, e, band, z > 0.0, tol).map(|outcome| EscapeClassification { outcome, witness_time: t })
    };
    if let Some(c) = check(0.0, &s.to_array()) {
        return Ok(c);
    }
    let opts = Options::with_tol(DEFAULT_TOL).max_steps(usize::MAX);
    let out = flow::integrate_with(p, *s, sg * horizon, &opts, |st| {
        found = check(st.t1().abs(), &st.y1);
        if found.is_some() {
            Control::Stop
        } else {
            Control::Continue
        }
    })?;
    found.ok_or_else(|| Error::EventNotFound(format!("classification unresolved after time {}", out.t.abs())))
}

/// A sample `(x, y)` of the graph of a local stable or unstable manifold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManifoldSample {
    /// Chart coordinate `x`.
    pub x: f64,
    /// Manifold height `y`.
    pub y: f64,
    /// Polar radius of `(u, v)` on the energy surface.
    pub rho: f64,
}

fn check_x(p: &Params, x: f64) -> Result<()> {
    let d = manifold_delta(p)?;
    if !(x > 0.0 && x <= d * (1.0 + 1e-12)) {
        return Err(Error::Domain(format!("x = {x} must lie in (0, {d}]")));
    }
    Ok(())
}

/// Boundary between escaping and returning initial values `y` at fixed `(x, theta)`,
/// bisected on `y in dir * (0, 2x)` with classification in direction `dir`.
fn manifold_height(p: &Params, x: f64, theta: f64, dir: Direction, tol: f64, horizon: f64) -> Result<f64> {
    let sg = dir.sign();
    let escapes = |y: f64| -> Result<Option<bool>> {
        let s = state_on_constraint(p, x, sg * y, theta)?;
        // Undecided within the horizon means the point lies within the
        // horizon's resolution of the manifold, like a parabolic verdict.
        match classify(p, &s, dir, 0.25 * tol, horizon) {
            Ok(c) => Ok(match c.outcome {
                Outcome::EscapesUp | Outcome::EscapesDown => Some(true),
                Outcome::Returns => Some(false),
                Outcome::Parabolic(_) => None,
            }),
            Err(Error::EventNotFound(_)) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let (mut lo, mut hi) = (0.0, 2.0 * x);
    if escapes(hi)? != Some(true) || escapes(lo)? != Some(false) {
        return Err(Error::Root(format!("manifold not bracketed in y at x = {x}")));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        match escapes(mid)? {
            Some(true) => hi = mid,
            Some(false) => lo = mid,
            None => return Ok(sg * mid),
        }
    }
    Ok(sg * 0.5 * (lo + hi))
}

/// Samples `y = ybar^s_theta(x)` of the local stable manifold of the orbit at
/// infinity on the section `W_theta` (polar angle `theta` of `(u, v)`), one
/// bisection per grid point.  Requires `x_grid` inside `(0, delta]`, see [`manifold_delta`].
pub fn stable_manifold_graph(p: &Params, theta: f64, x_grid: &[f64], tol: f64) -> Result<Vec<ManifoldSample>> {
    manifold_graph(p, theta, x_grid, Direction::Forward, tol)
}

/// Samples the local unstable manifold `y = ybar^u_theta(x)`, classifying
/// orbits backward in time.
pub fn unstable_manifold_graph(p: &Params, theta: f64, x_grid: &[f64], tol: f64) -> Result<Vec<ManifoldSample>> {
    manifold_graph(p, theta, x_grid, Direction::Backward, tol)
}

fn manifold_graph(p: &Params, theta: f64, x_grid: &[f64], dir: Direction, tol: f64) -> Result<Vec<ManifoldSample>> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance {tol} must be positive")));
    }
    for &x in x_grid {
        check_x(p, x)?;
    }
    x_grid
        .par_iter()
        .map(|&x| {
            let y = manifold_height(p, x, theta, dir, tol, DEFAULT_HORIZON / time_scale(p))?;
            let rho = radius_on_constraint(p, x, y, theta)?;
            Ok(ManifoldSample { x, y, rho })
        })
        .collect()
}

/// Slope of the manifold graph at `x = 0`, extrapolating `y/x` linearly in `x`
/// from the two samples with the smallest `x`.
pub fn slope_at_zero(samples: &[ManifoldSample]) -> Result<f64> {
    let mut s: Vec<&ManifoldSample> = samples.iter().collect();
    s.sort_by(|a, b| a.x.total_cmp(&b.x));
    match s.as_slice() {
        [a] => Ok(a.y / a.x),
        [a, b, ..] => {
            let (qa, qb) = (a.y / a.x, b.y / b.x);
            Ok(qa - a.x * (qb - qa) / (b.x - a.x))
        }
        [] => Err(Error::Domain("no manifold samples".into())),
    }
}

/// `rho^s_max(theta)`: the radius on `Sigma^+_{x0}` at `y = 0`.
pub fn rho_max(p: &Params, x0: f64, theta: f64) -> Result<f64> {
    radius_on_constraint(p, x0, 0.0, theta)
}

/// `rho^s_{x0}(theta)`: the radius where the stable manifold meets `Sigma^+_{x0}`.
pub fn rho_stable(p: &Params, x0: f64, theta: f64, tol: f64) -> Result<f64> {
    check_x(p, x0)?;
    let y = manifold_height(p, x0, theta, Direction::Forward, tol, DEFAULT_HORIZON / time_scale(p))?;
    radius_on_constraint(p, x0, y, theta)
}

/// Bounds for the angular speed near infinity on `{x <= x0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwistRegion {
    /// Lower bound `c_0` for `dtheta/dtau`.
    pub rate_floor: f64,
    /// Ratio of the `O(x^6)` perturbation to the unperturbed rate `varpi K / r^2`.
    pub perturbation_ratio: f64,
}

/// Lower bound on `dtheta/dtau` along orbits between `Sigma^+_{x0}` and
/// `Sigma^-_{x0}` (where `y^2 <= x^2 <= x0^2`), together with the relative size
/// of the `O(x^6)` terms.
pub fn twist_region(p: &Params, x0: f64) -> Result<TwistRegion> {
    let ri2 = rho_inf_sq(p);
    p.require_supercritical()?;
    let rho_hi = (ri2 + x0 * x0).sqrt();
    let rho_lo = (ri2 - 2.0 * x0 * x0).max(0.0).sqrt();
    if !(rho_lo > 0.0) {
        return Err(Error::Domain(format!("x0 = {x0} too large for rho_inf = {}", ri2.sqrt())));
    }
    let r_hi = radius_of_u(p, -rho_hi)?;
    let alpha = 4.0 / p.four_over_alpha();
    let main = p.varpi * time_scale(p) / (r_hi * r_hi);
    let pert = alpha * r_hi * x0.powi(6) / (8.0 * p.one_plus_two_alpha().sqrt() * rho_lo);
    Ok(TwistRegion { rate_floor: main - pert, perturbation_ratio: pert / main })
}

/// One point of a twist profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwistSample {
    /// Initial radius on `Sigma^+_{x0}`.
    pub rho0: f64,
    /// Transit time `T` to `Sigma^-_{x0}` (McGehee time).
    #[serde(rename = "T")]
    pub t: f64,
    /// Continuous angular variation `Theta` of `(u, v)` during the transit.
    #[serde(rename = "Theta")]
    pub theta: f64,
    /// `false` if the horizon cap was reached first; `T` and `Theta` are then lower bounds.
    pub resolved: bool,
}

/// Options for [`twist_profile`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwistOptions {
    /// Integration tolerance.
    pub tol: f64,
    /// Initial horizon in McGehee time; doubled until the event is found.
    pub horizon: f64,
    /// Horizon cap.
    pub max_horizon: f64,
}

impl Default for TwistOptions {
    fn default() -> Self {
        Self { tol: 1e-10, horizon: 1e3, max_horizon: 1e6 }
    }
}

/// Right-hand side extended by the continuous polar angle `theta` of `(u, v)`.
fn rhs_with_angle(p: &Params, y: &[f64; 5]) -> Result<[f64; 5]> {
    let d = rhs_array(p, &y[..4])?;
    let rho2 = y[2] * y[2] + y[3] * y[3];
    if !(rho2 > 0.0) {
        return Err(Error::Integration("(u, v) reached the origin".into()));
    }
    Ok([d[0], d[1], d[2], d[3], (y[2] * d[3] - y[3] * d[2]) / rho2])
}

fn transit(p: &Params, x0: f64, theta0: f64, rho0: f64, opts: &TwistOptions) -> Result<TwistSample> {
    let g = g_x(p, x0, rho0, theta0)?;
    let y2 = g + x0 * x0 - rho0 * rho0;
    if y2 < -1e-14 {
        return Err(Error::Domain(format!("rho0 = {rho0} exceeds rho_max")));
    }
    // Roundoff-level y^2 is the section boundary y = 0 itself.
    let y0 = if y2 <= 64.0 * f64::EPSILON * rho0 * rho0 { 0.0 } else { y2.sqrt() };
    if y0 == 0.0 {
        return Ok(TwistSample { rho0, t: 0.0, theta: 0.0, resolved: true });
    }
    let start = [x0, y0, rho0 * theta0.cos(), rho0 * theta0.sin(), theta0];
    let mut t0 = 0.0;
    let mut y = start;
    let mut horizon = opts.horizon.min(opts.max_horizon);
    let mut turned = false;
    loop {
        let mut hit: Option<(f64, [f64; 5])> = None;
        let out = ode::integrate(|_t, s| rhs_with_angle(p, s), t0, y, horizon, &chart_options(opts.tol), |st| {
            // The transit ends at the first return to x = x0 after the turning point y = 0.
            let mut from = st.t0;
            if !turned {
                if st.y1[1] >= 0.0 {
                    return Control::Continue;
                }
                turned = true;
                let yc = |t: f64| Ok(st.eval_component(t, 1));
                from = roots::brent(yc, st.t0, st.t1(), 1e-15 * st.t1().abs().max(1.0)).unwrap_or(st.t0);
            }
            if st.y1[0] >= x0 && st.eval_component(from, 0) < x0 {
                let xc = |t: f64| Ok(st.eval_component(t, 0) - x0);
                if let Ok(tc) = roots::brent(xc, from, st.t1(), 1e-15 * st.t1().abs().max(1.0)) {
                    hit = Some((tc, st.eval(tc)));
                    return Control::Stop;
                }
            }
            Control::Continue
        })?;
        if let Some((tc, s)) = hit {
            return Ok(TwistSample { rho0, t: tc, theta: s[4] - theta0, resolved: true });
        }
        if horizon >= opts.max_horizon {
            return Ok(TwistSample { rho0, t: out.t, theta: out.y[4] - theta0, resolved: false });
        }
        t0 = out.t;
        y = out.y;
        horizon = (2.0 * horizon).min(opts.max_horizon);
    }
}

/// Transit time `T` and angular variation `Theta` from `Sigma^+_{x0}` to
/// `Sigma^-_{x0}` for initial points `(rho0, theta0)`, `rho0` in
/// `(rho^s_{x0}(theta0), rho^s_max(theta0)]`.  Points whose transit exceeds
/// the horizon cap are returned unresolved with lower bounds.
pub fn twist_profile(p: &Params, x0: f64, theta0: f64, rho_grid: &[f64], opts: &TwistOptions) -> Result<Vec<TwistSample>> {
    check_x(p, x0)?;
    rho_grid.par_iter().map(|&rho0| transit(p, x0, theta0, rho0, opts)).collect()
}

/// Radii `rho^s + (rho_max - rho^s) 2^{-j}`, `j = 0..=halvings`.
pub fn gap_grid(p: &Params, x0: f64, theta0: f64, halvings: u32, tol: f64) -> Result<Vec<f64>> {
    let rs = rho_stable(p, x0, theta0, tol)?;
    let rm = rho_max(p, x0, theta0)?;
    Ok((0..=halvings).map(|j| rs + (rm - rs) * 0.5f64.powi(j as i32)).collect())
}

/// Kind of a catalogue entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessKind {
    /// Parabolic in both time directions.
    Parabolic,
    /// Two brake points (momentum zero on the Hill boundary).
    Brake,
    /// A brake point and a parabolic end.
    BrakeParabolic,
    /// Closed orbit (a z-symmetric brake orbit, closed after four quarter periods).
    Periodic,
}

/// A numerically located special trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// Kind of trajectory.
    #[serde(rename = "type")]
    pub kind: WitnessKind,
    /// Initial state of the witness.
    pub state: State4,
    /// Characteristic time: crossing time for brake witnesses, decision time
    /// for parabolic ones, period for periodic ones.
    pub witness_time: f64,
    /// Residual of the defining condition after refinement.
    pub residual: f64,
    /// Validation figure: distance to the predicted state for brake and
    /// periodic witnesses, smallest outgoing speed for parabolic ones.
    pub validation_residual: f64,
    /// `true` when the validation confirmed the claimed behaviour.
    pub validated: bool,
}

/// Search budget for [`detect_parabolic_and_brake`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    /// Samples per scanned curve.
    pub samples: usize,
    /// Largest starting height of brake points.
    pub z_cap: f64,
    /// Physical time horizon of each classification.
    pub horizon: f64,
    /// Refinement tolerance.
    pub tol: f64,
}

impl Default for Budget {
    fn default() -> Self {
        Self { samples: 40, z_cap: 30.0, horizon: 2e4, tol: 1e-7 }
    }
}

/// Witnesses found within the budget (possibly incomplete).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    /// The witnesses.
    pub witnesses: Vec<Witness>,
}

impl Catalog {
    /// Writes one JSON object per line.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for x in &self.witnesses {
            writeln!(w, "{}", serde_json::to_string(x).map_err(std::io::Error::other)?)?;
        }
        Ok(())
    }
}

/// The two components `(r_-, r*_-)` and `(r*_+, r_+)` of the radii below the
/// upper Hill boundary, `r*_{-/+} = (1 -/+ sqrt(1 - 2 varpi^2))/2`.
pub fn boundary_branches(p: &Params) -> Result<[(f64, f64); 2]> {
    p.require_supercritical()?;
    let (rm, rp) = p.r_minus_plus();
    let s = (1.0 - 2.0 * p.varpi * p.varpi).sqrt();
    Ok([(rm, 0.5 * (1.0 - s)), (0.5 * (1.0 + s), rp)])
}

/// Radius on a boundary branch where the Hill boundary has height `z`.
fn branch_radius(p: &Params, branch: (f64, f64), z: f64) -> Result<f64> {
    let g = |r: f64| flow::potential(p, r, z).map(|v| v + 1.0);
    roots::brent(g, branch.0, branch.1, 1e-15 * branch.1)
}

/// Brake point with height `z` on a boundary branch.
fn brake_point(p: &Params, branch: (f64, f64), z: f64) -> Result<State4> {
    Ok(State4::new(0.0, 0.0, branch_radius(p, branch, z)?, z))
}

/// First crossing of `z = 0` from a state with `z > 0`: returns the crossing
/// state and time.
fn first_crossing(p: &Params, s: &State4, horizon: f64) -> Result<(State4, f64)> {
    let mut hit = None;
    let opts = Options::with_tol(1e-12).max_steps(usize::MAX);
    flow::integrate_with(p, *s, horizon, &opts, |st| {
        if st.y0[3] > 0.0 && st.y1[3] <= 0.0 {
            if let Some(tc) = ode::find_crossing(st, |_t, y| y[3]) {
                hit = Some((State4::from_array(st.eval(tc)), tc));
                return Control::Stop;
            }
        }
        Control::Continue
    })?;
    hit.ok_or_else(|| Error::EventNotFound("no crossing of z = 0".into()))
}

fn brake_witnesses(p: &Params, branch: (f64, f64), budget: &Budget) -> Result<Vec<Witness>> {
    let n = budget.samples.max(2);
    let zmin = 1e-3 * budget.z_cap;
    let heights: Vec<f64> = (0..n).map(|i| zmin * (budget.z_cap / zmin).powf(i as f64 / (n - 1) as f64)).collect();
    let pr_at = |z: f64| -> Result<f64> {
        let s = brake_point(p, branch, z)?;
        Ok(first_crossing(p, &s, budget.horizon)?.0.p_r)
    };
    let vals: Vec<Option<f64>> = heights.par_iter().map(|&z| pr_at(z).ok()).collect();
    let mut out = Vec::new();
    for i in 0..n - 1 {
        let (Some(a), Some(b)) = (vals[i], vals[i + 1]) else { continue };
        if a.signum() == b.signum() {
            continue;
        }
        let Ok(z) = roots::brent(|z| pr_at(z), heights[i], heights[i + 1], 1e-15 * heights[i + 1]) else { continue };
        let s = brake_point(p, branch, z)?;
        let (c, tc) = first_crossing(p, &s, budget.horizon)?;
        // z-symmetry: the orbit continues to the mirror brake point and back.
        let mirror = flow::propagate(p, s, 2.0 * tc, 1e-12)?;
        let target = s.z_reflect();
        let val = mirror.dist(&target);
        let back = flow::propagate(p, s, 4.0 * tc, 1e-12)?;
        let val_p = back.dist(&s);
        let scale = 1.0 + s.z;
        out.push(Witness {
            kind: WitnessKind::Brake,
            state: s,
            witness_time: tc,
            residual: c.p_r.abs(),
            validation_residual: val,
            validated: val <= 1e-5 * scale,
        });
        out.push(Witness {
            kind: WitnessKind::Periodic,
            state: s,
            witness_time: 4.0 * tc,
            residual: c.p_r.abs(),
            validation_residual: val_p,
            validated: val_p <= 1e-5 * scale,
        });
    }
    Ok(out)
}

/// Checks that `|z|` grows monotonically and `p_z z` keeps its sign on
/// `[t_start, t_start + span]` in direction `dir`; returns the smallest
/// outgoing speed `p_z sign(z)` observed, or `-1` if `|z|` failed to grow.
pub fn validate_escape(p: &Params, s: &State4, dir: Direction, t_start: f64, span: f64) -> Result<f64> {
    let sg = dir.sign();
    let opts = Options::with_tol(1e-11).max_steps(usize::MAX);
    let mut min_speed = f64::INFINITY;
    let mut last_abs_z = f64::NEG_INFINITY;
    let mut monotone = true;
    flow::integrate_with(p, *s, sg * (t_start + span), &opts, |st| {
        if st.t1().abs() >= t_start {
            let (pz, z) = (st.y1[1], st.y1[3]);
            min_speed = min_speed.min(sg * pz * z.signum());
            if z.abs() < last_abs_z {
                monotone = false;
            }
            last_abs_z = z.abs();
        }
        Control::Continue
    })?;
    Ok(if monotone { min_speed } else { -1.0 })
}

fn escape_predicate(p: &Params, s: &State4, dir: Direction, budget: &Budget) -> Option<(bool, f64, Outcome)> {
    let c = classify_state(p, s, dir, budget.tol, budget.horizon).ok()?;
    match c.outcome {
        Outcome::EscapesUp | Outcome::EscapesDown => Some((true, c.witness_time, c.outcome)),
        Outcome::Returns => Some((false, c.witness_time, c.outcome)),
        Outcome::Parabolic(_) => Some((true, c.witness_time, c.outcome)),
    }
}

/// Bisects a one-parameter family `state(s)` between an escaping and a
/// returning member; returns the escaping endpoint, its decision time and the
/// final bracket width.
fn bisect_escape<F>(p: &Params, state: F, mut a: f64, mut b: f64, dir: Direction, budget: &Budget) -> Option<(State4, f64, f64)>
where
    F: Fn(f64) -> Result<State4>,
{
    // a escapes, b returns.
    let mut ta = 0.0;
    for _ in 0..200 {
        if (a - b).abs() <= budget.tol * a.abs().max(b.abs()).max(1.0) {
            break;
        }
        let m = 0.5 * (a + b);
        let s = state(m).ok()?;
        let (esc, t, out) = escape_predicate(p, &s, dir, budget)?;
        if let Outcome::Parabolic(_) = out {
            return Some((s, t, (a - b).abs()));
        }
        if esc {
            a = m;
            ta = t;
        } else {
            b = m;
        }
    }
    Some((state(a).ok()?, ta, (a - b).abs()))
}

fn parabolic_witnesses(p: &Params, budget: &Budget) -> Result<Vec<Witness>> {
    // z-symmetric candidates: Sigma_0^+ along p_r = 0.
    let (rm, rp) = p.r_minus_plus();
    let n = budget.samples.max(2);
    let state = |r: f64| -> Result<State4> {
        let v = flow::potential(p, r, 0.0)?;
        let pz2 = 2.0 * (-1.0 - v);
        if !(pz2 > 0.0) {
            return Err(Error::Domain(format!("r = {r} outside the Hill region")));
        }
        Ok(State4::new(0.0, pz2.sqrt(), r, 0.0))
    };
    let rs: Vec<f64> = (1..n).map(|i| rm + (rp - rm) * i as f64 / n as f64).collect();
    let vals: Vec<Option<bool>> = rs
        .par_iter()
        .map(|&r| state(r).ok().and_then(|s| escape_predicate(p, &s, Direction::Forward, budget)).map(|v| v.0))
        .collect();
    let mut out = Vec::new();
    for i in 0..rs.len() - 1 {
        let (Some(a), Some(b)) = (vals[i], vals[i + 1]) else { continue };
        if a == b {
            continue;
        }
        let (ea, rb) = if a { (rs[i], rs[i + 1]) } else { (rs[i + 1], rs[i]) };
        let Some((s, t, width)) = bisect_escape(p, state, ea, rb, Direction::Forward, budget) else { continue };
        let fwd = validate_escape(p, &s, Direction::Forward, t, t.max(100.0))?;
        let bwd = validate_escape(p, &s, Direction::Backward, t, t.max(100.0))?;
        out.push(Witness {
            kind: WitnessKind::Parabolic,
            state: s,
            witness_time: t,
            residual: width,
            validation_residual: fwd.min(bwd),
            validated: fwd > 0.0 && bwd > 0.0,
        });
    }
    Ok(out)
}

fn brake_parabolic_witnesses(p: &Params, branch: (f64, f64), budget: &Budget) -> Result<Vec<Witness>> {
    let n = budget.samples.max(2);
    let zmin = 1e-3 * budget.z_cap;
    let heights: Vec<f64> = (0..n).map(|i| zmin * (budget.z_cap / zmin).powf(i as f64 / (n - 1) as f64)).collect();
    let state = |z: f64| brake_point(p, branch, z);
    let vals: Vec<Option<bool>> = heights
        .par_iter()
        .map(|&z| state(z).ok().and_then(|s| escape_predicate(p, &s, Direction::Forward, budget)).map(|v| v.0))
        .collect();
    let mut out = Vec::new();
    for i in 0..n - 1 {
        let (Some(a), Some(b)) = (vals[i], vals[i + 1]) else { continue };
        if a == b {
            continue;
        }
        let (ea, rb) = if a { (heights[i], heights[i + 1]) } else { (heights[i + 1], heights[i]) };
        let Some((s, t, width)) = bisect_escape(p, state, ea, rb, Direction::Forward, budget) else { continue };
        let fwd = validate_escape(p, &s, Direction::Forward, t, t.max(100.0))?;
        out.push(Witness {
            kind: WitnessKind::BrakeParabolic,
            state: s,
            witness_time: t,
            residual: width,
            validation_residual: fwd,
            validated: fwd > 0.0,
        });
    }
    Ok(out)
}

/// Searches for z-symmetric brake orbits (brake points on both upper Hill
/// boundary branches whose first crossing of `z = 0` has `p_r = 0`), the
/// periodic orbits they close up to, z-symmetric parabolic trajectories
/// (`Sigma_0^+` along `p_r = 0`) and brake-parabolic trajectories.  Every
/// witness is refined and then validated by an independent integration.
pub fn detect_parabolic_and_brake(p: &Params, budget: &Budget) -> Result<Catalog> {
    p.require_supercritical()?;
    let branches = boundary_branches(p)?;
    let mut witnesses = Vec::new();
    for b in branches {
        witnesses.extend(brake_witnesses(p, b, budget)?);
    }
    witnesses.extend(parabolic_witnesses(p, budget)?);
    for b in branches {
        witnesses.extend(brake_parabolic_witnesses(p, b, budget)?);
    }
    Ok(Catalog { witnesses })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_varpi_infinity_radius() {
        // varpi = 1/2: beta = sqrt((1 - ecc^2)/2) / varpi.
        let ecc: f64 = 0.9;
        let beta = ((1.0 - ecc * ecc) / 2.0).sqrt() / 0.5;
        let p = Params::from_beta_ecc(beta, ecc).unwrap();
        assert!((infinity_orbit(&p).unwrap() - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn chart_round_trip() {
        let p = Params::from_beta_ecc(0.9, 0.9).unwrap();
        let s = State4::new(0.3, -0.2, 0.7, 25.0);
        let m = McGeheeState::from_state(&p, &s).unwrap();
        assert!(m.to_state(&p).unwrap().dist(&s) < 1e-13);
    }
}
