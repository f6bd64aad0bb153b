//! The reduced Hamiltonian flow, the Euler orbit and the Hill region.
//!
//! The reduced Hamiltonian is
//! `H = (p_r^2 + p_z^2)/2 + V(r, z)` with
//! `V = varpi^2/(2 r^2) - 1/r - (4/alpha)/sqrt(r^2 + (1 + 2 alpha) z^2)`,
//! restricted to the energy level `H = -1`.  The Euler orbit is the collinear
//! solution in the plane `z = p_z = 0`; in terms of its true anomaly `theta`
//! it reads `r = varpi^2 beta / (1 + ecc cos theta)`,
//! `p_r = ecc sin(theta) / (varpi beta)`.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{self, Control, DenseStep, Options};
use crate::params::Params;
use crate::quad;
use crate::roots;

/// A phase-space point `(p_r, p_z, r, z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State4 {
    /// Radial momentum.
    pub p_r: f64,
    /// Vertical momentum.
    pub p_z: f64,
    /// Radius, positive.
    pub r: f64,
    /// Height.
    pub z: f64,
}

impl State4 {
    /// Constructs a state.
    pub fn new(p_r: f64, p_z: f64, r: f64, z: f64) -> Self {
        Self { p_r, p_z, r, z }
    }

    /// Packs as `[p_r, p_z, r, z]`.
    pub fn to_array(self) -> [f64; 4] {
        [self.p_r, self.p_z, self.r, self.z]
    }

    /// Unpacks from `[p_r, p_z, r, z]`.
    pub fn from_array(a: [f64; 4]) -> Self {
        Self { p_r: a[0], p_z: a[1], r: a[2], z: a[3] }
    }

    /// The `z`-symmetry `(p_r, p_z, r, z) -> (p_r, -p_z, r, -z)`.
    pub fn z_reflect(self) -> Self {
        Self { p_z: -self.p_z, z: -self.z, ..self }
    }

    /// Momentum reversal `(p_r, p_z) -> (-p_r, -p_z)`.
    pub fn reverse_momenta(self) -> Self {
        Self { p_r: -self.p_r, p_z: -self.p_z, ..self }
    }

    /// Euclidean distance in `R^4`.
    pub fn dist(&self, other: &Self) -> f64 {
        let a = self.to_array();
        let b = other.to_array();
        a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    }
}

/// Sampled solution of the flow.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    /// Sample times, strictly monotone in the integration direction.
    pub times: Vec<f64>,
    /// States at the sample times.
    pub states: Vec<State4>,
    /// `max |H + 1|` over the samples.
    pub energy_drift: f64,
}

impl Trajectory {
    /// Final state.
    pub fn last(&self) -> State4 {
        *self.states.last().expect("trajectory has at least one sample")
    }

    /// Writes `t, p_r, p_z, r, z, H+1` rows.
    pub fn write_csv<W: Write>(&self, p: &Params, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,p_r,p_z,r,z,h_plus_1")?;
        for (t, s) in self.times.iter().zip(&self.states) {
            let h = hamiltonian(p, s).map(|h| h + 1.0).unwrap_or(f64::NAN);
            writeln!(w, "{t},{},{},{},{},{h:e}", s.p_r, s.p_z, s.r, s.z)?;
        }
        Ok(())
    }
}

/// The potential `V(r, z)`.
pub fn potential(p: &Params, r: f64, z: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("r = {r} must be positive")));
    }
    let q = (r * r + p.one_plus_two_alpha() * z * z).sqrt();
    Ok(p.varpi * p.varpi / (2.0 * r * r) - 1.0 / r - p.four_over_alpha() / q)
}

/// The Hamiltonian `H(p_r, p_z, r, z)`.
pub fn hamiltonian(p: &Params, s: &State4) -> Result<f64> {
    Ok(0.5 * (s.p_r * s.p_r + s.p_z * s.p_z) + potential(p, s.r, s.z)?)
}

/// Hamilton's equations; the result is `(dp_r, dp_z, dr, dz)/dt` packed as a state.
pub fn vector_field(p: &Params, s: &State4) -> Result<State4> {
    Ok(State4::from_array(rhs(p, &s.to_array())?))
}

/// Array form of [`vector_field`].
#[inline]
pub fn rhs(p: &Params, y: &[f64; 4]) -> Result<[f64; 4]> {
    let (p_r, p_z, r, z) = (y[0], y[1], y[2], y[3]);
    if !(r > 0.0) {
        return Err(Error::Domain(format!("r = {r} must be positive")));
    }
    let k = p.one_plus_two_alpha();
    let q2 = r * r + k * z * z;
    let g = p.four_over_alpha() / (q2 * q2.sqrt());
    let w2 = p.varpi * p.varpi;
    Ok([w2 / (r * r * r) - 1.0 / (r * r) - g * r, -g * k * z, p_r, p_z])
}

/// Collision guard used by every integration of the flow: `r >= 1e-6 r_-`.
pub fn collision_radius(p: &Params) -> f64 {
    1e-6 * p.r_minus_plus().0
}

fn guarded_rhs(p: &Params, rmin: f64, y: &[f64; 4]) -> Result<[f64; 4]> {
    if y[2] < rmin {
        return Err(Error::Integration(format!("collision guard: r = {} < {rmin:e}", y[2])));
    }
    rhs(p, y)
}

/// Integrates the flow with an arbitrary observer on the dense steps.
pub fn integrate_with<O>(p: &Params, s0: State4, t_end: f64, opts: &Options, observer: O) -> Result<ode::Outcome<4>>
where
    O: FnMut(&DenseStep<4>) -> Control,
{
    let rmin = collision_radius(p);
    ode::integrate(|_t, y| guarded_rhs(p, rmin, y), 0.0, s0.to_array(), t_end, opts, observer)
}

/// Final state of the flow after time `t` (either sign).
pub fn propagate(p: &Params, s0: State4, t: f64, tol: f64) -> Result<State4> {
    Ok(State4::from_array(integrate_with(p, s0, t, &Options::with_tol(tol), |_| Control::Continue)?.y))
}

/// Integrates from `s0` over `[0, t_end]`, sampling every accepted step.
pub fn integrate(p: &Params, s0: State4, t_end: f64, tol: f64) -> Result<Trajectory> {
    if !t_end.is_finite() {
        return Err(Error::Domain("t_end must be finite".into()));
    }
    let mut times = vec![0.0];
    let mut states = vec![s0];
    let h0 = hamiltonian(p, &s0)?;
    let mut drift = (h0 + 1.0).abs();
    integrate_with(p, s0, t_end, &Options::with_tol(tol), |st| {
        let s = State4::from_array(st.y1);
        if let Ok(h) = hamiltonian(p, &s) {
            drift = drift.max((h + 1.0).abs());
        }
        times.push(st.t1());
        states.push(s);
        Control::Continue
    })?;
    if t_end != 0.0 {
        // The final sample carries the exact end time.
        *times.last_mut().expect("nonempty") = t_end;
    }
    Ok(Trajectory { times, states, energy_drift: drift })
}

/// Fixed-step fourth-order symplectic integrator (Yoshida composition of
/// Störmer–Verlet) for the separable Hamiltonian; used to cross-check energy
/// behaviour of the adaptive integrator.
pub fn integrate_symplectic(p: &Params, s0: State4, t_end: f64, steps: usize) -> Result<Trajectory> {
    let cbrt2 = 2f64.cbrt();
    let w1 = 1.0 / (2.0 - cbrt2);
    let w0 = -cbrt2 * w1;
    let h = t_end / steps as f64;
    let mut y = s0.to_array();
    let mut times = vec![0.0];
    let mut states = vec![s0];
    let mut drift = (hamiltonian(p, &s0)? + 1.0).abs();
    let rmin = collision_radius(p);
    for n in 0..steps {
        for w in [w1, w0, w1] {
            let hw = h * w;
            y[2] += 0.5 * hw * y[0];
            y[3] += 0.5 * hw * y[1];
            let f = guarded_rhs(p, rmin, &y)?;
            y[0] += hw * f[0];
            y[1] += hw * f[1];
            y[2] += 0.5 * hw * y[0];
            y[3] += 0.5 * hw * y[1];
        }
        let s = State4::from_array(y);
        drift = drift.max((hamiltonian(p, &s)? + 1.0).abs());
        times.push((n + 1) as f64 * h);
        states.push(s);
    }
    Ok(Trajectory { times, states, energy_drift: drift })
}

/// Euler-orbit state at true anomaly `theta`.
pub fn euler_state(p: &Params, theta: f64) -> State4 {
    let r = p.semi_latus() / (1.0 + p.ecc * theta.cos());
    State4::new(p.ecc * theta.sin() / (p.varpi * p.beta), 0.0, r, 0.0)
}

/// Euler-orbit state at anomaly `theta` together with the physical time
/// `t(theta) = int_0^theta r_e^2 / varpi`, obtained by adaptive quadrature.
pub fn euler_orbit(p: &Params, theta: f64) -> Result<(State4, f64)> {
    let s = euler_state(p, theta);
    let full = (theta / (2.0 * PI)).trunc();
    let rem = theta - full * 2.0 * PI;
    let dt = |th: f64| {
        let r = p.semi_latus() / (1.0 + p.ecc * th.cos());
        r * r / p.varpi
    };
    let mut t = 0.0;
    if full != 0.0 {
        t += full * quad::integrate(dt, 0.0, 2.0 * PI, 1e-13, 1e-13)?.value;
    }
    t += quad::integrate(dt, 0.0, rem, 1e-13, 1e-13)?.value;
    Ok((s, t))
}

/// Time period `pi / (sqrt(2) beta)` of the Euler orbit for the flow of `H`.
pub fn euler_time_period(p: &Params) -> f64 {
    PI / (2f64.sqrt() * p.beta)
}

/// Action (Reeb period) of the Euler orbit,
/// `T_e = 2 pi (1 - sqrt(1 - ecc^2)) / (sqrt(2) beta)`, which is also the area of
/// the disk `Upsilon`.
pub fn euler_period(p: &Params) -> f64 {
    2.0 * PI * (1.0 - (1.0 - p.ecc * p.ecc).sqrt()) / (2f64.sqrt() * p.beta)
}

/// `T_e` as twice the integral of `p_r` over `[r_-, r_+]` along the boundary of `Upsilon`.
pub fn euler_period_quadrature(p: &Params) -> Result<f64> {
    let (rm, rp) = p.r_minus_plus();
    // Substitute r = (rm + rp)/2 - (rp - rm)/2 cos(phi) to remove the square-root endpoints.
    let (c, h) = (0.5 * (rm + rp), 0.5 * (rp - rm));
    let w2 = p.varpi * p.varpi;
    let f = |phi: f64| {
        let r = c - h * phi.cos();
        let pr2 = (-2.0 - w2 / (r * r) + 2.0 / (p.beta * r)).max(0.0);
        pr2.sqrt() * h * phi.sin()
    };
    Ok(2.0 * quad::integrate(f, 0.0, PI, 1e-14, 1e-14)?.value)
}

/// Hill region `{V <= -1}` of a parameter point.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HillRegion {
    /// Pericentre `(1 - ecc)/(2 beta)`.
    pub r_minus: f64,
    /// Apocentre `(1 + ecc)/(2 beta)`.
    pub r_plus: f64,
    /// `true` when the region is unbounded in `z` (supercritical points).
    pub unbounded: bool,
    params: Params,
}

/// Builds the Hill region of `p`.
pub fn hill_region(p: &Params) -> HillRegion {
    let (r_minus, r_plus) = p.r_minus_plus();
    HillRegion { r_minus, r_plus, unbounded: p.regime().margin > 0.0, params: *p }
}

impl HillRegion {
    /// Height `z_+(r) >= 0` of the boundary `V(r, z_+) = -1` over `r` in
    /// `[r_-, r_+]`; `Ok(f64::INFINITY)` where the region is unbounded.
    pub fn z_plus(&self, r: f64) -> Result<f64> {
        let p = &self.params;
        if r < self.r_minus * (1.0 - 1e-14) || r > self.r_plus * (1.0 + 1e-14) {
            return Err(Error::Domain(format!("r = {r} outside [r_-, r_+]")));
        }
        let g = |z: f64| potential(p, r, z).map(|v| v + 1.0);
        // Roundoff-level depth is the endpoint itself; the root would sit at sqrt(eps).
        let scale = p.varpi * p.varpi / (2.0 * r * r) + (1.0 + p.four_over_alpha()) / r + 1.0;
        if g(0.0)? >= -16.0 * f64::EPSILON * scale {
            return Ok(0.0);
        }
        let far = p.varpi * p.varpi / (2.0 * r * r) - 1.0 / r + 1.0;
        if far <= 0.0 {
            return Ok(f64::INFINITY);
        }
        let mut hi = r.max(1.0);
        while g(hi)? < 0.0 {
            hi *= 2.0;
            if hi > 1e300 {
                return Ok(f64::INFINITY);
            }
        }
        roots::brent(g, 0.0, hi, 1e-15 * hi)
    }

    /// Writes `r, z_plus` rows at `n + 1` equally spaced radii.
    pub fn write_csv<W: Write>(&self, n: usize, mut w: W) -> std::io::Result<()> {
        writeln!(w, "r,z_plus")?;
        for i in 0..=n {
            let r = self.r_minus + (self.r_plus - self.r_minus) * i as f64 / n as f64;
            let z = self.z_plus(r).unwrap_or(f64::NAN);
            writeln!(w, "{r},{z}")?;
        }
        Ok(())
    }
}
