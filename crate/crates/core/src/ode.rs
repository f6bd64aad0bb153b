//! Adaptive Dormand–Prince 5(4) integrator with continuous (dense) output.
//!
//! The integrator works on fixed-size states `[f64; N]`.  Every accepted step
//! is handed to a caller-supplied observer together with a [`DenseStep`] that
//! evaluates a fourth-order accurate interpolant anywhere inside the step;
//! observers use it for sampling and for locating events, and may stop the
//! integration early.

use crate::error::{Error, Result};

/// Tolerances and limits for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct Options {
    /// Relative tolerance.
    pub rtol: f64,
    /// Absolute tolerance.
    pub atol: f64,
    /// Largest admissible step size (absolute value).
    pub hmax: f64,
    /// Initial step size; `0.0` selects one automatically.
    pub h0: f64,
    /// Maximal number of accepted plus rejected steps.
    pub max_steps: usize,
}

impl Options {
    /// Options with `rtol = atol = tol`.
    pub fn with_tol(tol: f64) -> Self {
        Self { rtol: tol, atol: tol, hmax: f64::INFINITY, h0: 0.0, max_steps: 5_000_000 }
    }

    /// Sets the maximal step size.
    pub fn hmax(mut self, hmax: f64) -> Self {
        self.hmax = hmax;
        self
    }

    /// Sets the step budget.
    pub fn max_steps(mut self, n: usize) -> Self {
        self.max_steps = n;
        self
    }
}

impl Default for Options {
    fn default() -> Self {
        Self::with_tol(1e-10)
    }
}

/// Decision returned by an observer after each accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    /// Keep integrating.
    Continue,
    /// Stop after this step.
    Stop,
}

/// Continuous extension of one accepted step on `[t0, t0 + h]`.
#[derive(Debug, Clone, Copy)]
pub struct DenseStep<const N: usize> {
    /// Left end of the step.
    pub t0: f64,
    /// Signed step size.
    pub h: f64,
    /// State at the left end.
    pub y0: [f64; N],
    /// State at the right end.
    pub y1: [f64; N],
    /// Derivative at the left end.
    pub f0: [f64; N],
    /// Derivative at the right end.
    pub f1: [f64; N],
    rcont: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    /// Right end of the step.
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    /// Interpolated state at time `t` (meaningful for `t` inside the step).
    pub fn eval(&self, t: f64) -> [f64; N] {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let r = &self.rcont;
        let mut out = [0.0; N];
        for i in 0..N {
            out[i] = r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])));
        }
        out
    }

    /// Interpolated single component at time `t`.
    pub fn eval_component(&self, t: f64, i: usize) -> f64 {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let r = &self.rcont;
        r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])))
    }
}

// Butcher tableau of the Dormand–Prince pair.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
// Error coefficients: fifth-order weights minus embedded fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Dense output coefficients.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[inline]
fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] += h * acc;
    }
    out
}

fn check_finite<const N: usize>(y: &[f64; N]) -> Result<()> {
    if y.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Integration("non-finite state".into()))
    }
}

/// Summary returned by [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct Outcome<const N: usize> {
    /// Final time reached (`t_end` unless the observer stopped early).
    pub t: f64,
    /// Final state.
    pub y: [f64; N],
    /// Accepted steps.
    pub accepted: usize,
    /// Rejected steps.
    pub rejected: usize,
    /// `true` if the observer requested the stop.
    pub stopped: bool,
}

fn initial_step<const N: usize, F>(f: &F, t0: f64, y0: &[f64; N], f0: &[f64; N], dir: f64, opts: &Options) -> Result<f64>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let mut dnf = 0.0;
    let mut dny = 0.0;
    for i in 0..N {
        let sk = opts.atol + opts.rtol * y0[i].abs();
        dnf += (f0[i] / sk).powi(2);
        dny += (y0[i] / sk).powi(2);
    }
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { (dny / dnf).sqrt() * 0.01 };
    h = h.min(opts.hmax);
    let y1 = axpy(y0, dir * h, &[(1.0, f0)]);
    let f1 = f(t0 + dir * h, &y1)?;
    let mut der2 = 0.0;
    for i in 0..N {
        let sk = opts.atol + opts.rtol * y0[i].abs();
        der2 += ((f1[i] - f0[i]) / sk).powi(2);
    }
    let der2 = der2.sqrt() / h;
    let der12 = der2.max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 { (h * 1e-3).max(1e-6) } else { (0.01 / der12).powf(0.2) };
    Ok((100.0 * h).min(h1).min(opts.hmax))
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end` (either direction).
///
/// After every accepted step `observer` receives the dense step and may stop
/// the integration.  Errors from `f` (e.g. a collision guard) are propagated.
pub fn integrate<const N: usize, F, O>(
    f: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    opts: &Options,
    mut observer: O,
) -> Result<Outcome<N>>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
    O: FnMut(&DenseStep<N>) -> Control,
{
    check_finite(&y0)?;
    let mut t = t0;
    let mut y = y0;
    if t_end == t0 {
        return Ok(Outcome { t, y, accepted: 0, rejected: 0, stopped: false });
    }
    let dir = if t_end > t0 { 1.0 } else { -1.0 };
    let mut k1 = f(t, &y)?;
    let mut h = if opts.h0 > 0.0 { opts.h0.min(opts.hmax) } else { initial_step(&f, t, &y, &k1, dir, opts)? };
    let mut accepted = 0usize;
    let mut rejected = 0usize;
    let mut err_old: f64 = 1e-4;
    let mut last_rejected = false;
    loop {
        if accepted + rejected >= opts.max_steps {
            return Err(Error::Integration(format!("step budget {} exhausted at t = {t}", opts.max_steps)));
        }
        let remaining = (t_end - t).abs();
        let mut last = false;
        if h >= remaining * (1.0 - 1e-13) {
            h = remaining;
            last = true;
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(Error::Integration(format!("step size underflow at t = {t} (h = {h:e})")));
        }
        let hs = dir * h;
        let k2 = f(t + C2 * hs, &axpy(&y, hs, &[(A21, &k1)]))?;
        let k3 = f(t + C3 * hs, &axpy(&y, hs, &[(A31, &k1), (A32, &k2)]))?;
        let k4 = f(t + C4 * hs, &axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]))?;
        let k5 = f(t + C5 * hs, &axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
        let y6 = axpy(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
        let k6 = f(t + hs, &y6)?;
        let ynew = axpy(&y, hs, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = f(t + hs, &ynew)?;
        let mut err = 0.0;
        for i in 0..N {
            let ei = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sk = opts.atol + opts.rtol * y[i].abs().max(ynew[i].abs());
            err += (ei / sk).powi(2);
        }
        let err = (err / N as f64).sqrt();
        if !err.is_finite() {
            h *= 0.1;
            rejected += 1;
            last_rejected = true;
            continue;
        }
        if err <= 1.0 {
            // Lund-stabilised PI controller (beta = 0.04).
            let fac = (err.max(1e-10).powf(0.2 - 0.04 * 0.75) / err_old.powf(0.04) / 0.9).clamp(0.1, 5.0);
            let mut hnew = h / fac;
            if last_rejected {
                hnew = hnew.min(h);
            }
            err_old = err.max(1e-4);
            let mut rcont = [[0.0; N]; 5];
            for i in 0..N {
                let ydiff = ynew[i] - y[i];
                let bspl = hs * k1[i] - ydiff;
                rcont[0][i] = y[i];
                rcont[1][i] = ydiff;
                rcont[2][i] = bspl;
                rcont[3][i] = ydiff - hs * k7[i] - bspl;
                rcont[4][i] = hs * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            let step = DenseStep { t0: t, h: hs, y0: y, y1: ynew, f0: k1, f1: k7, rcont };
            accepted += 1;
            t = if last { t_end } else { t + hs };
            y = ynew;
            k1 = k7;
            check_finite(&y)?;
            if observer(&step) == Control::Stop {
                return Ok(Outcome { t, y, accepted, rejected, stopped: true });
            }
            if last {
                return Ok(Outcome { t, y, accepted, rejected, stopped: false });
            }
            h = hnew.min(opts.hmax);
            last_rejected = false;
        } else {
            let fac = (err.powf(0.2) / 0.9).min(10.0);
            h /= fac;
            rejected += 1;
            last_rejected = true;
        }
    }
}

/// Integrates to `t_end` and returns only the final state.
pub fn solve<const N: usize, F>(f: F, t0: f64, y0: [f64; N], t_end: f64, opts: &Options) -> Result<[f64; N]>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
{
    Ok(integrate(f, t0, y0, t_end, opts, |_| Control::Continue)?.y)
}

/// Locates a sign change of `g` inside a dense step by bracketing plus
/// Illinois-regula-falsi iterations on the interpolant.
///
/// Returns the crossing time, or `None` if `g` has the same sign at both ends.
pub fn find_crossing<const N: usize, G>(step: &DenseStep<N>, g: G) -> Option<f64>
where
    G: Fn(f64, &[f64; N]) -> f64,
{
    let (mut a, mut b) = (step.t0, step.t1());
    let mut ga = g(a, &step.y0);
    let mut gb = g(b, &step.y1);
    if ga == 0.0 {
        return Some(a);
    }
    if ga * gb > 0.0 || !(ga.is_finite() && gb.is_finite()) {
        return None;
    }
    for _ in 0..200 {
        let c = (a * gb - b * ga) / (gb - ga);
        let gc = g(c, &step.eval(c));
        if gc == 0.0 {
            return Some(c);
        }
        if gc * gb < 0.0 {
            a = b;
            ga = gb;
        } else {
            ga *= 0.5;
        }
        b = c;
        gb = gc;
        if (b - a).abs() <= 4.0 * f64::EPSILON * b.abs().max(1.0) {
            return Some(b);
        }
    }
    Some(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn harmonic(_t: f64, y: &[f64; 2]) -> Result<[f64; 2]> {
        Ok([y[1], -y[0]])
    }

    #[test]
    fn harmonic_oscillator_period() {
        let y = solve(harmonic, 0.0, [1.0, 0.0], 2.0 * std::f64::consts::PI, &Options::with_tol(1e-12)).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-10 && y[1].abs() < 1e-10, "{y:?}");
    }

    #[test]
    fn backward_integration() {
        let y = solve(harmonic, 0.0, [1.0, 0.0], -1.0, &Options::with_tol(1e-12)).unwrap();
        assert!((y[0] - 1f64.cos()).abs() < 1e-10);
        assert!((y[1] - 1f64.sin()).abs() < 1e-10);
    }

    #[test]
    fn zero_span() {
        let out = integrate(harmonic, 3.0, [1.0, 2.0], 3.0, &Options::default(), |_| Control::Continue).unwrap();
        assert_eq!(out.accepted, 0);
        assert_eq!(out.y, [1.0, 2.0]);
    }

    #[test]
    fn dense_output_is_accurate() {
        // Interpolation error must be small compared with the step's local error scale.
        let mut worst: f64 = 0.0;
        integrate(harmonic, 0.0, [1.0, 0.0], 20.0, &Options::with_tol(1e-10), |s| {
            for k in 1..10 {
                let t = s.t0 + s.h * k as f64 / 10.0;
                let y = s.eval(t);
                worst = worst.max((y[0] - t.cos()).abs()).max((y[1] + t.sin()).abs());
            }
            Control::Continue
        })
        .unwrap();
        assert!(worst < 1e-8, "worst dense error {worst}");
    }

    #[test]
    fn dense_output_order_four() {
        // Halving a fixed step reduces the mid-step interpolation error by ~2^5.
        let err_for = |h: f64| {
            let opts = Options { rtol: 1.0, atol: 1.0, hmax: h, h0: h, max_steps: 10 };
            let mut e = 0.0;
            integrate(|_t, y: &[f64; 1]| Ok([y[0]]), 0.0, [1.0], h, &opts, |s| {
                let t = 0.37 * h;
                e = (s.eval(t)[0] - t.exp()).abs();
                Control::Continue
            })
            .unwrap();
            e
        };
        let r = err_for(0.2) / err_for(0.1);
        assert!(r > 20.0, "ratio {r}");
    }

    #[test]
    fn crossing_location() {
        let mut hit = None;
        integrate(harmonic, 0.0, [1.0, 0.0], 3.0, &Options::with_tol(1e-12), |s| {
            if let Some(tc) = find_crossing(s, |_, y| y[0]) {
                hit = Some(tc);
                return Control::Stop;
            }
            Control::Continue
        })
        .unwrap();
        assert!((hit.unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-10);
    }
}
