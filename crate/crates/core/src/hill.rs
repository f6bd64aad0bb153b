//! Transverse linearisation along the Euler orbit.
//!
//! In the true anomaly `theta` the vertical variation `x` of the Euler orbit
//! satisfies the Hill equation `x'' = -(1 + 7 beta/(1 + ecc cos theta)) x`.
//! Writing `xi = (x', x)` gives the planar Hamiltonian system
//! `xi' = J diag(1, k(theta)) xi` with `J = [[0, -1], [1, 0]]`, whose
//! fundamental solution `gamma: [0, 2 pi] -> Sp(2)` is a positive path.
//!
//! This module computes the fundamental solution, the `omega`-index and
//! nullity of `gamma` (Maslov-type index with the `e^{-eps J}` convention), the
//! mean index and rotation number, a truncated Fourier matrix whose positive
//! inertia is the Morse index of the Hill operator, and the degenerate curves
//! `Gamma_j^omega` in the `(beta, ecc)` plane.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{self, Control, Options};
use crate::params::Params;
use crate::roots;

const TWO_PI: f64 = 2.0 * PI;

/// Largest eccentricity accepted by the Hill-equation routines.
pub const ECC_MAX: f64 = 0.995;

/// Size of the `e^{-eps J}` perturbation, in turns, used when counting crossings.
pub const INDEX_EPS: f64 = 1e-6;

/// Relative tolerance below which a singular value counts as zero for nullities
/// and conjugacy-class decisions.
pub const NULLITY_TOL: f64 = 1e-7;

/// A real 2x2 matrix stored row-major as `[a, b, c, d]` for `[[a, b], [c, d]]`.
pub type Mat2 = [f64; 4];

/// 2x2 matrix product.
pub fn mat_mul(x: &Mat2, y: &Mat2) -> Mat2 {
    [
        x[0] * y[0] + x[1] * y[2],
        x[0] * y[1] + x[1] * y[3],
        x[2] * y[0] + x[3] * y[2],
        x[2] * y[1] + x[3] * y[3],
    ]
}

/// Determinant.
pub fn mat_det(x: &Mat2) -> f64 {
    x[0] * x[3] - x[1] * x[2]
}

/// Matrix-vector product.
pub fn mat_vec(x: &Mat2, v: [f64; 2]) -> [f64; 2] {
    [x[0] * v[0] + x[1] * v[1], x[2] * v[0] + x[3] * v[1]]
}

/// Integer power by repeated squaring.
pub fn mat_pow(x: &Mat2, mut n: u32) -> Mat2 {
    let mut acc = [1.0, 0.0, 0.0, 1.0];
    let mut base = *x;
    while n > 0 {
        if n & 1 == 1 {
            acc = mat_mul(&acc, &base);
        }
        base = mat_mul(&base, &base);
        n >>= 1;
    }
    acc
}

/// Rotation matrix `e^{t J} = [[cos t, -sin t], [sin t, cos t]]`.
pub fn rotation(t: f64) -> Mat2 {
    let (s, c) = t.sin_cos();
    [c, -s, s, c]
}

/// Coefficient `1 + 7 beta/(1 + ecc cos theta)` of the Hill equation.
pub fn hill_coefficient(beta: f64, ecc: f64, theta: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&ecc) {
        return Err(Error::Domain(format!("ecc = {ecc} must lie in [0, 1)")));
    }
    Ok(1.0 + 7.0 * beta / (1.0 + ecc * theta.cos()))
}

/// Symplectic conjugacy class of a matrix in `Sp(2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ConjugacyClass {
    /// Similar to the rotation `R(vartheta)`, `vartheta` in `(0, pi) U (pi, 2 pi)`.
    Elliptic {
        /// Rotation angle.
        vartheta: f64,
    },
    /// Similar to `D(lambda) = diag(lambda, 1/lambda)`, `|lambda| > 1`.
    Hyperbolic {
        /// Eigenvalue of modulus larger than one.
        lambda: f64,
    },
    /// Similar to `N(sign, a) = [[sign, a], [0, sign]]` with `a` in `{-1, 0, 1}`.
    Parabolic {
        /// Eigenvalue `+1` or `-1`.
        sign: i8,
        /// Normal-form entry.
        a: i8,
    },
}

/// Classifies `m in Sp(2)` up to symplectic similarity.
pub fn conjugacy_class(m: &Mat2) -> ConjugacyClass {
    conjugacy_class_with_tol(m, NULLITY_TOL)
}

/// Classification with an explicit relative tolerance for `|tr m| = 2`.
pub fn conjugacy_class_with_tol(m: &Mat2, rel_tol: f64) -> ConjugacyClass {
    let tr = m[0] + m[3];
    let scale = m.iter().map(|v| v.abs()).fold(1.0, f64::max);
    let tol = rel_tol * scale;
    if (tr.abs() - 2.0).abs() <= tol {
        let sign: f64 = if tr > 0.0 { 1.0 } else { -1.0 };
        // J (M - sign I) is (nearly) symmetric and semi-definite; its trace gives a.
        let off = (m[0] - sign).abs().max((m[3] - sign).abs()).max(m[1].abs()).max(m[2].abs());
        let a = if off <= tol {
            0
        } else {
            let t = sign * (m[1] - m[2]);
            if t > 0.0 {
                1
            } else {
                -1
            }
        };
        return ConjugacyClass::Parabolic { sign: sign as i8, a };
    }
    // 1 - (tr/2)^2 written without cancellation for M near +/-I.
    let half_diff = 0.5 * (m[0] - m[3]);
    let sin2 = -m[1] * m[2] - half_diff * half_diff;
    if sin2 > 0.0 && tr.abs() < 2.0 {
        let th = sin2.sqrt().atan2(0.5 * tr);
        let vartheta = if m[2] > 0.0 { th } else { TWO_PI - th };
        ConjugacyClass::Elliptic { vartheta }
    } else {
        let disc = (0.25 * tr * tr - 1.0).sqrt();
        let lambda = 0.5 * tr + disc.copysign(tr);
        ConjugacyClass::Hyperbolic { lambda }
    }
}

/// Discretised fundamental solution of the transverse linear system.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SymplecticPath2 {
    /// Mass parameter.
    pub beta: f64,
    /// Eccentricity.
    pub ecc: f64,
    /// Number of periods represented.
    pub m: usize,
    /// Grid on `[0, 2 pi m]`.
    pub thetas: Vec<f64>,
    /// `gamma(theta)` at the grid points.
    pub matrices: Vec<Mat2>,
    /// Continuous argument of `gamma(theta) e_1` at the grid points.
    pub arg_e1: Vec<f64>,
    /// Continuous argument of `gamma(theta) e_2` at the grid points.
    pub arg_e2: Vec<f64>,
}

/// Integrates the fundamental solution over `[0, 2 pi m]`.
///
/// The stored grid resolves every quarter of a radian of rotation of the
/// column vectors by at least eight points (so at least 32 per half turn).
pub fn fundamental_solution(beta: f64, ecc: f64, m_periods: usize, tol: f64) -> Result<SymplecticPath2> {
    if !(beta > 0.0) {
        return Err(Error::Domain(format!("beta = {beta} must be positive")));
    }
    if !(0.0..=ECC_MAX).contains(&ecc) {
        return Err(Error::Domain(format!("ecc = {ecc} must lie in [0, {ECC_MAX}]")));
    }
    if m_periods == 0 {
        return Err(Error::Domain("m_periods must be at least 1".into()));
    }
    let f = move |th: f64, y: &[f64; 6]| -> Result<[f64; 6]> {
        let k = 1.0 + 7.0 * beta / (1.0 + ecc * th.cos());
        let na = y[0] * y[0] + y[1] * y[1];
        let nb = y[2] * y[2] + y[3] * y[3];
        Ok([
            -k * y[1],
            y[0],
            -k * y[3],
            y[2],
            (y[0] * y[0] + k * y[1] * y[1]) / na,
            (y[2] * y[2] + k * y[3] * y[3]) / nb,
        ])
    };
    let y0 = [1.0, 0.0, 0.0, 1.0, 0.0, PI / 2.0];
    let mut thetas = vec![0.0];
    let mut samples = vec![y0];
    let max_turn = PI / 32.0;
    let opts = Options::with_tol(tol);
    // One integration per period so that every multiple of 2 pi is a grid point.
    let mut y = y0;
    for k in 0..m_periods {
        let (t0, t1) = (TWO_PI * k as f64, TWO_PI * (k + 1) as f64);
        let out = ode::integrate(f, t0, y, t1, &opts, |st| {
            let turn = (st.y1[4] - st.y0[4]).abs().max((st.y1[5] - st.y0[5]).abs());
            let pieces = (turn / max_turn).ceil().max(1.0) as usize;
            for k in 1..pieces {
                let t = st.t0 + st.h * k as f64 / pieces as f64;
                thetas.push(t);
                samples.push(st.eval(t));
            }
            thetas.push(st.t1());
            samples.push(st.y1);
            Control::Continue
        })?;
        y = out.y;
        *thetas.last_mut().expect("nonempty") = t1;
    }
    let matrices = samples.iter().map(|y| [y[0], y[2], y[1], y[3]]).collect();
    let arg_e1 = samples.iter().map(|y| y[4]).collect();
    let arg_e2 = samples.iter().map(|y| y[5]).collect();
    Ok(SymplecticPath2 { beta, ecc, m: m_periods, thetas, matrices, arg_e1, arg_e2 })
}

impl SymplecticPath2 {
    /// `gamma(2 pi)`, the monodromy of one period.
    pub fn monodromy(&self) -> Mat2 {
        self.matrices[self.period_index()]
    }

    /// Largest `|det gamma - 1|` along the path.
    pub fn det_drift(&self) -> f64 {
        self.matrices.iter().map(|m| (mat_det(m) - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Net number of turns of `gamma e_1` over one period.
    fn delta_e1(&self) -> f64 {
        let idx = self.period_index();
        self.arg_e1[idx] / TWO_PI
    }

    fn period_index(&self) -> usize {
        let i = self.thetas.partition_point(|&t| t < TWO_PI);
        i.min(self.thetas.len() - 1)
    }

    /// Winding data of the one-period monodromy.
    pub fn winding(&self) -> Winding {
        Winding::new(self.monodromy(), self.delta_e1())
    }

    /// Rotation number `rho(gamma) = hat i(gamma)/2` from the mean-index formula.
    pub fn rotation_number(&self) -> f64 {
        self.winding().rotation_number()
    }
}

/// Winding data of a one-period positive path in `Sp(2)`: the monodromy `M`
/// and the number of turns `Delta(e_1)` made by `gamma(theta) e_1`.
///
/// Because `d/dphi arg(M v(phi)) = 1/|M v(phi)|^2 > 0`, the number of turns
/// `Delta(phi)` of any other starting vector `v(phi) = (cos phi, sin phi)` is
/// determined by these two pieces of data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Winding {
    /// Monodromy `gamma(2 pi)`.
    pub monodromy: Mat2,
    /// Turns of `gamma e_1` over one period.
    pub delta0: f64,
}

fn wrap_0_2pi(x: f64) -> f64 {
    let y = x.rem_euclid(TWO_PI);
    if y >= TWO_PI {
        0.0
    } else {
        y
    }
}

impl Winding {
    /// Constructs the winding data.
    pub fn new(monodromy: Mat2, delta0: f64) -> Self {
        Self { monodromy, delta0 }
    }

    fn arg_image(&self, phi: f64) -> f64 {
        let w = mat_vec(&self.monodromy, [phi.cos(), phi.sin()]);
        w[1].atan2(w[0])
    }

    /// Turns `Delta(phi)` of the starting vector at angle `phi`.
    pub fn delta(&self, phi: f64) -> f64 {
        // Reduce to phi in [0, pi): Delta is pi-periodic.
        let k = (phi / PI).floor();
        let ph = phi - k * PI;
        let a0 = self.arg_image(0.0);
        let mut inc = wrap_0_2pi(self.arg_image(ph) - a0);
        // The increment lies in [0, pi]; values near 2 pi are wrap-around of ~0.
        if inc > 1.5 * PI {
            inc -= TWO_PI;
        }
        self.delta0 + (inc - ph) / TWO_PI
    }

    /// The interval `I_gamma = [min Delta, max Delta]`.
    pub fn delta_interval(&self) -> (f64, f64) {
        // Critical points of Delta are the unit vectors with |M v| = 1.
        let m = &self.monodromy;
        let a = m[0] * m[0] + m[2] * m[2];
        let b = m[0] * m[1] + m[2] * m[3];
        let c = m[1] * m[1] + m[3] * m[3];
        let mean = 0.5 * (a + c);
        let w = 0.5 * (a - c);
        let r = (w * w + b * b).sqrt();
        let mut cands = vec![0.0, PI / 2.0];
        if r > 1e-14 {
            let delta = b.atan2(w);
            let cosv = ((1.0 - mean) / r).clamp(-1.0, 1.0);
            let ac = cosv.acos();
            for s in [ac, -ac] {
                cands.push(0.5 * (delta + s));
            }
        }
        let vals: Vec<f64> = cands.iter().map(|&ph| self.delta(ph)).collect();
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    /// The `1`-index via the `Delta`-interval characterisation:
    /// `i_1 = 2k` if `k in I_gamma - eps`, and `2k + 1` if
    /// `I_gamma - eps` lies in `(k, k + 1)`.
    pub fn i1(&self) -> i64 {
        let (lo, hi) = self.delta_interval();
        index_from_interval(lo, hi)
    }

    /// Mean index `hat i` from the iteration formula for `Sp(2)` paths:
    /// `i_1 - 1 + vartheta/pi` for `M ~ R(vartheta)`, `i_1 + 1` for
    /// `M ~ N(1, a)` with `a` in `{0, 1}`, and `i_1` otherwise.
    ///
    /// Reliable away from `M = +/-I`; [`Winding::rotation_number`] is the
    /// robust variant.
    pub fn mean_index_iteration(&self) -> f64 {
        let i1 = self.i1() as f64;
        match conjugacy_class_with_tol(&self.monodromy, 1e-13) {
            ConjugacyClass::Elliptic { vartheta } => i1 - 1.0 + vartheta / PI,
            ConjugacyClass::Parabolic { sign: 1, a } if a >= 0 => i1 + 1.0,
            _ => i1,
        }
    }

    /// Mean index `hat i = 2 rho`.
    pub fn mean_index(&self) -> f64 {
        2.0 * self.rotation_number()
    }

    /// Rotation number `rho(gamma)`.
    ///
    /// The rotation number lies in `I_gamma` and is congruent modulo one to
    /// `vartheta/(2 pi)` for elliptic monodromy, to `0` when `tr M >= 2` and to
    /// `1/2` when `tr M <= -2`; the interval (of width below one) fixes the
    /// integer part.  This stays continuous through `M = +/-I`.
    pub fn rotation_number(&self) -> f64 {
        let (lo, hi) = self.delta_interval();
        let mid = 0.5 * (lo + hi);
        let tr = self.monodromy[0] + self.monodromy[3];
        match conjugacy_class_with_tol(&self.monodromy, 0.0) {
            ConjugacyClass::Elliptic { vartheta } => {
                let f = vartheta / TWO_PI;
                f + (mid - f).round()
            }
            _ if tr >= 0.0 => mid.round(),
            _ => (mid - 0.5).round() + 0.5,
        }
    }

    /// Winding data of the `m`-th iterate `gamma^m`.
    pub fn iterate(&self, m: u32) -> Winding {
        let mut total = 0.0;
        let mut phi: f64 = 0.0;
        for _ in 0..m {
            total += self.delta(phi);
            let v = mat_vec(&self.monodromy, [phi.cos(), phi.sin()]);
            phi = v[1].atan2(v[0]);
        }
        Winding { monodromy: mat_pow(&self.monodromy, m), delta0: total }
    }

    /// Turns of `gamma^m v` divided by `m`, for `v = e_1`; converges to `rho`.
    pub fn winding_average(&self, m: u32) -> f64 {
        let mut total = 0.0;
        let mut v: [f64; 2] = [1.0, 0.0];
        for _ in 0..m {
            let phi = v[1].atan2(v[0]);
            total += self.delta(phi);
            let w = mat_vec(&self.monodromy, v);
            let n = (w[0] * w[0] + w[1] * w[1]).sqrt();
            v = [w[0] / n, w[1] / n];
        }
        total / m as f64
    }

    /// The `omega`-index for `omega = e^{2 pi i nu}` from the Bott-type
    /// iteration formula `i_1(gamma^m) = sum_{omega^m = 1} i_omega(gamma)`;
    /// available for `nu` in `{0, 1/2, 1/4, 3/4}`.
    pub fn omega_index_bott(&self, nu: f64) -> Option<i64> {
        let nu = nu.rem_euclid(1.0);
        let close = |x: f64| (nu - x).abs() < 1e-14;
        if close(0.0) {
            Some(self.i1())
        } else if close(0.5) {
            Some(self.iterate(2).i1() - self.i1())
        } else if close(0.25) || close(0.75) {
            let d = self.iterate(4).i1() - self.iterate(2).i1();
            Some(d / 2)
        } else {
            None
        }
    }
}

/// `i_1` from `I_gamma = [lo, hi]` with the `eps` shift.
pub fn index_from_interval(lo: f64, hi: f64) -> i64 {
    let (lo, hi) = (lo - INDEX_EPS, hi - INDEX_EPS);
    let k = hi.floor();
    if k >= lo {
        2 * k as i64
    } else {
        2 * k as i64 + 1
    }
}

/// `dim_C ker(M - omega I)` for `omega = e^{2 pi i nu}`, from singular values.
pub fn nullity(m: &Mat2, nu: f64) -> usize {
    let (s, c) = (TWO_PI * nu).sin_cos();
    // A = M - omega I as a complex matrix; entries (re, im).
    let a = [(m[0] - c, -s), (m[1], 0.0), (m[2], 0.0), (m[3] - c, -s)];
    let fro2: f64 = a.iter().map(|(x, y)| x * x + y * y).sum();
    // det A = a0 a3 - a1 a2 (complex).
    let det_re = a[0].0 * a[3].0 - a[0].1 * a[3].1 - a[1].0 * a[2].0;
    let det_im = a[0].0 * a[3].1 + a[0].1 * a[3].0;
    let det = (det_re * det_re + det_im * det_im).sqrt();
    let disc = (fro2 * fro2 - 4.0 * det * det).max(0.0).sqrt();
    let s1 = (0.5 * (fro2 + disc)).sqrt();
    let s2 = if s1 > 0.0 { det / s1 } else { 0.0 };
    let scale = m.iter().map(|v| v.abs()).fold(1.0, f64::max);
    let tol = NULLITY_TOL * scale;
    (s1 <= tol) as usize + (s2 <= tol) as usize
}

/// Index, nullity and rotation data for one `omega`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexData {
    /// Rotation number `rho(gamma)`.
    pub rho: f64,
    /// `nu` with `omega = e^{2 pi i nu}`.
    pub nu: f64,
    /// `omega`-index.
    pub i_omega: i64,
    /// `omega`-nullity.
    pub nu_omega: usize,
    /// Monodromy `gamma(2 pi)`.
    pub monodromy: Mat2,
    /// Symplectic conjugacy class of the monodromy.
    pub conjugacy_class: ConjugacyClass,
}

/// Signed count of crossings of `e^{-eps J} gamma` with `Sp(2)^0_omega` for
/// `omega = e^{2 pi i nu}` not real; crossings are zeros of
/// `tr(e^{-eps J} gamma) - 2 cos(2 pi nu)`, each weighted by the sign of the
/// co-oriented intersection.
pub fn crossing_index(path: &SymplecticPath2, nu: f64) -> Result<i64> {
    let target = 2.0 * (TWO_PI * nu).cos();
    if (target.abs() - 2.0).abs() < 1e-12 {
        return Err(Error::Domain("crossing count needs omega not in {1, -1}".into()));
    }
    let rot = rotation(-TWO_PI * INDEX_EPS);
    let end = path.period_index();
    let vals: Vec<(f64, f64)> = path.matrices[..=end]
        .iter()
        .map(|m| {
            let p = mat_mul(&rot, m);
            (p[0] + p[3] - target, p[2])
        })
        .collect();
    let mut count = 0i64;
    for w in vals.windows(2) {
        let (f0, c0) = w[0];
        let (f1, c1) = w[1];
        if f0 == 0.0 || f0 * f1 < 0.0 {
            let slope = f1 - f0;
            // sin(vartheta) has the sign of the (2,1) entry at the crossing.
            let c = if f1.abs() < f0.abs() { c1 } else { c0 };
            count += if slope * c < 0.0 { 1 } else { -1 };
        }
    }
    Ok(count)
}

/// `omega`-index and nullity of a path for `omega = e^{2 pi i nu}`.
///
/// `nu = 0` uses the `Delta`-interval characterisation of `i_1`, `nu = 1/2`
/// the Bott formula `i_{-1}(gamma) = i_1(gamma^2) - i_1(gamma)`, and every other
/// `nu` the signed crossing count of the perturbed path.
pub fn omega_index_and_nullity(path: &SymplecticPath2, nu: f64) -> Result<IndexData> {
    let nu = nu.rem_euclid(1.0);
    let w = path.winding();
    let i_omega = match w.omega_index_bott(nu) {
        Some(i) if nu == 0.0 || nu == 0.5 => i,
        _ => crossing_index(path, nu)?,
    };
    let m = w.monodromy;
    Ok(IndexData {
        rho: w.rotation_number(),
        nu,
        i_omega,
        nu_omega: nullity(&m, nu),
        monodromy: m,
        conjugacy_class: conjugacy_class(&m),
    })
}

/// Rotation number `rho(gamma_{beta, ecc})` of the transverse path.
pub fn rotation_number(path: &SymplecticPath2) -> f64 {
    path.rotation_number()
}

/// Default integration tolerance for the Hill system.
pub const HILL_TOL: f64 = 1e-12;

/// Rotation number `rho(gamma)` at `(beta, ecc)`.
pub fn rho_at(beta: f64, ecc: f64) -> Result<f64> {
    Ok(fundamental_solution(beta, ecc, 1, HILL_TOL)?.rotation_number())
}

/// Rotation number `rho_e = rho(gamma) + 1` of the Euler orbit.
pub fn euler_rotation_number(p: &Params) -> Result<f64> {
    Ok(rho_at(p.beta, p.ecc)? + 1.0)
}

/// `s = (sqrt(1 - ecc^2) - 1)/ecc`, the ratio of the Fourier coefficients of
/// `1/(1 + ecc cos theta)`.
pub fn fourier_ratio(ecc: f64) -> f64 {
    if ecc == 0.0 {
        0.0
    } else {
        ((1.0 - ecc * ecc).sqrt() - 1.0) / ecc
    }
}

/// Diagonal entry `lambda_n = 1 - sqrt(1 - ecc^2)((n + nu)^2 - 1)/(7 beta)` of the
/// scaled Fourier matrix.
pub fn fourier_diag(beta: f64, ecc: f64, nu: f64, n: i64) -> f64 {
    let q = n as f64 + nu;
    1.0 - (1.0 - ecc * ecc).sqrt() * (q * q - 1.0) / (7.0 * beta)
}

/// Scaled Fourier matrix on the index window `n_lo..=n_hi` (entries
/// `lambda_n` on the diagonal, `s^{|k-l|}` off the diagonal).
pub fn fourier_matrix(beta: f64, ecc: f64, nu: f64, n_lo: i64, n_hi: i64) -> DMatrix<f64> {
    let s = fourier_ratio(ecc);
    let dim = (n_hi - n_lo + 1) as usize;
    DMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            fourier_diag(beta, ecc, nu, n_lo + i as i64)
        } else {
            s.powi((i as i32 - j as i32).abs())
        }
    })
}

/// Number of positive eigenvalues of [`fourier_matrix`] on the window of the
/// `dim` integers closest to `-nu`.
pub fn fourier_positive_count(beta: f64, ecc: f64, nu: f64, dim: usize) -> usize {
    let centre = (-nu).round() as i64;
    let n_lo = centre - (dim as i64 - 1) / 2;
    let n_hi = n_lo + dim as i64 - 1;
    let a = fourier_matrix(beta, ecc, nu, n_lo, n_hi);
    let eig = a.symmetric_eigenvalues();
    eig.iter().filter(|&&l| l > 0.0).count()
}

/// Morse index of the Hill operator on `omega`-quasi-periodic functions,
/// `omega = e^{2 pi i nu}`, estimated from the truncated Fourier matrix.
///
/// `n` is the initial truncation (`N + 2` rows); it must be at least
/// `2 sqrt(1 + 7 beta) + 4`.  The window is enlarged until the count is
/// unchanged between `N`, `N + 4` and `2N`.
pub fn morse_index_fourier(beta: f64, ecc: f64, nu: f64, n: usize) -> Result<usize> {
    if !(ecc > 0.0 && ecc < 1.0) {
        return Err(Error::Domain(format!("ecc = {ecc} must lie in (0, 1)")));
    }
    let min_n = 2.0 * (1.0 + 7.0 * beta).sqrt() + 4.0;
    if (n as f64) < min_n {
        return Err(Error::Domain(format!("truncation N = {n} below {min_n:.2}")));
    }
    let mut n = n;
    for _ in 0..12 {
        let c0 = fourier_positive_count(beta, ecc, nu, n + 2);
        let c1 = fourier_positive_count(beta, ecc, nu, n + 6);
        let c2 = fourier_positive_count(beta, ecc, nu, 2 * n + 2);
        if c0 == c1 && c1 == c2 {
            return Ok(c0);
        }
        n *= 2;
    }
    Err(Error::Domain("Fourier truncation did not stabilise".into()))
}

/// Default starting truncation for [`morse_index_fourier`].
pub fn default_truncation(beta: f64, ecc: f64) -> usize {
    let s = fourier_ratio(ecc).abs();
    let base = 2.0 * (1.0 + 7.0 * beta).sqrt() + 4.0;
    let spread = 2.0 * ((1.0 + s) / (1.0 - s) * 7.0 * beta / (1.0 - ecc * ecc).sqrt() + 1.0).sqrt() + 8.0;
    base.max(spread).max(40.0).ceil() as usize
}

/// Branch selector of the `omega = -1` degenerate curves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// Lower curve `Gamma_{j,-}` (kernel of sine type).
    Minus,
    /// Upper curve `Gamma_{j,+}` (kernel of cosine type).
    Plus,
}

/// One sample of a degenerate curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    /// Eccentricity.
    pub ecc: f64,
    /// Degenerate mass parameter.
    pub beta: f64,
    /// Rotation number at the sample.
    pub rho: f64,
    /// `omega`-nullity of the monodromy at the sample.
    pub nullity: usize,
    /// Parity detected from the monodromy for `nu = 1/2` (`None` otherwise or
    /// when the detector is ambiguous).
    pub parity: Option<Branch>,
}

/// A traced degenerate curve `Gamma_j^omega`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegenerateCurve {
    /// Level `j`.
    pub j: u32,
    /// `nu` with `omega = e^{2 pi i nu}`.
    pub omega_nu: f64,
    /// Branch for `nu = 1/2`.
    pub branch: Option<Branch>,
    /// Samples along the eccentricity grid.
    pub samples: Vec<CurveSample>,
}

impl DegenerateCurve {
    /// Writes `ecc, beta, rho, nullity` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "ecc,beta,rho,nullity")?;
        for s in &self.samples {
            writeln!(w, "{},{},{},{}", s.ecc, s.beta, s.rho, s.nullity)?;
        }
        Ok(())
    }
}

/// `((j + nu)^2 - 1)/7`, the degenerate value of `beta` on the circular orbit.
pub fn beta_circular(j: u32, nu: f64) -> f64 {
    let q = j as f64 + nu;
    (q * q - 1.0) / 7.0
}

fn winding_at(beta: f64, ecc: f64, tol: f64) -> Result<Winding> {
    Ok(fundamental_solution(beta, ecc, 1, tol)?.winding())
}

/// Parity class of the `-1` kernel read off the monodromy: by reversibility
/// `M_11 = M_22`, so at `tr M = -2` one of the off-diagonal entries vanishes;
/// `M_21 = 0` means the kernel vector has `x(0) = 0` (sine type).
pub fn parity_of(m: &Mat2) -> Option<Branch> {
    let (b, c) = (m[1].abs(), m[2].abs());
    let big = b.max(c);
    if big < 1e-6 {
        return None;
    }
    if c < 1e-3 * big {
        Some(Branch::Minus)
    } else if b < 1e-3 * big {
        Some(Branch::Plus)
    } else {
        None
    }
}

fn beta_for_rho(level: f64, ecc: f64) -> Result<f64> {
    let rho = |b: f64| -> Result<f64> { Ok(winding_at(b, ecc, 1e-11)?.rotation_number()) };
    let guess = beta_circular(0, level);
    let mut lo = (0.2 * guess).max(1e-6);
    while rho(lo)? >= level {
        lo *= 0.5;
        if lo < 1e-9 {
            return Err(Error::Root(format!("rho = {level} not bracketed from below")));
        }
    }
    let mut hi = guess + 1e-6;
    while rho(hi)? < level {
        hi = hi * 1.5 + 0.1;
        if hi > 50.0 {
            return Err(Error::Root(format!("rho = {level} not bracketed from above")));
        }
    }
    roots::brent(|b| Ok(rho(b)? - level), lo, hi, 1e-9)
}

/// Degenerate `beta` at one eccentricity, together with the parity read off
/// the monodromy for `nu` in `{0, 1/2}`.
///
/// For `nu` in `{0, 1/2}` reversibility gives `M_11 = M_22`, so the edges of
/// the `tr M = +/-2` set are the simple zeros of `M_21` (sine-type kernel) and
/// `M_12` (cosine-type kernel).  Both zeros are located with Brent's method
/// inside the window `|rho - (j + nu)| < 1/4`; the minus branch is the lower
/// one.  For other `nu` the curve is the simple zero of
/// `tr M - 2 cos(2 pi nu)` inside a window around `rho = j + nu`.
pub fn degenerate_point(j: u32, nu: f64, branch: Option<Branch>, ecc: f64, tol: f64) -> Result<(f64, Option<Branch>)> {
    let level = j as f64 + nu;
    let b0 = beta_circular(j, nu);
    if !(b0 > 0.0) {
        return Err(Error::Domain(format!("level j + nu = {level} gives beta(0) <= 0")));
    }
    let hill_tol = 1e-13;
    let mono = |b: f64| -> Result<Mat2> { Ok(fundamental_solution(b, ecc, 1, hill_tol)?.monodromy()) };
    let special = nu == 0.0 || (nu - 0.5).abs() < 1e-14;
    if special {
        let (lo, hi) = if ecc == 0.0 {
            let d = 0.05 * b0.min(1.0);
            (b0 - d, b0 + d)
        } else {
            (beta_for_rho(level - 0.25, ecc)?, beta_for_rho(level + 0.25, ecc)?)
        };
        let r21 = roots::brent(|b| Ok(mono(b)?[2]), lo, hi, tol)?;
        let r12 = roots::brent(|b| Ok(mono(b)?[1]), lo, hi, tol)?;
        let (lower, upper) = if r21 <= r12 { ((r21, Branch::Minus), (r12, Branch::Plus)) } else { ((r12, Branch::Plus), (r21, Branch::Minus)) };
        // On the circle (and on coexistence curves) both zeros coincide.
        let split = (r21 - r12).abs() > 10.0 * tol;
        let (beta, kind) = if branch == Some(Branch::Plus) { upper } else { lower };
        Ok((beta, split.then_some(kind)))
    } else {
        if ecc == 0.0 {
            return Ok((b0, None));
        }
        let frac_half = (2.0 * nu).fract();
        let delta = 0.25 * frac_half.min(1.0 - frac_half);
        let lo = beta_for_rho(level - delta, ecc)?;
        let hi = beta_for_rho(level + delta, ecc)?;
        let target = 2.0 * (TWO_PI * nu).cos();
        let b = roots::brent(|b| { let m = mono(b)?; Ok(m[0] + m[3] - target) }, lo, hi, tol)?;
        Ok((b, None))
    }
}

/// Degenerate `beta` at one eccentricity.
pub fn degenerate_beta(j: u32, nu: f64, branch: Option<Branch>, ecc: f64, tol: f64) -> Result<f64> {
    Ok(degenerate_point(j, nu, branch, ecc, tol)?.0)
}

/// Traces `Gamma_j^omega` (or `Gamma_{j, +/-}` for `nu = 1/2`) over `ecc_grid`.
pub fn trace_degenerate_curve(j: u32, nu: f64, branch: Option<Branch>, ecc_grid: &[f64], tol: f64) -> Result<DegenerateCurve> {
    if j == 0 {
        return Err(Error::Domain("j must be positive".into()));
    }
    let nu = nu.rem_euclid(1.0);
    let half = (nu - 0.5).abs() < 1e-14;
    if half && branch.is_none() {
        return Err(Error::Domain("nu = 1/2 requires a branch".into()));
    }
    let mut samples = Vec::with_capacity(ecc_grid.len());
    for &ecc in ecc_grid {
        if !(0.0..=ECC_MAX).contains(&ecc) {
            return Err(Error::Domain(format!("ecc = {ecc} outside [0, {ECC_MAX}]")));
        }
        let (beta, parity) = degenerate_point(j, nu, branch, ecc, tol)?;
        let path = fundamental_solution(beta, ecc, 1, 1e-13)?;
        let m = path.monodromy();
        samples.push(CurveSample {
            ecc,
            beta,
            rho: path.rotation_number(),
            nullity: nullity_loose(&m, nu),
            parity,
        });
    }
    Ok(DegenerateCurve { j, omega_nu: nu, branch: if half { branch } else { None }, samples })
}

/// Nullity with a tolerance suited to root-found parameters (`1e-5`).
fn nullity_loose(m: &Mat2, nu: f64) -> usize {
    let (s, c) = (TWO_PI * nu).sin_cos();
    let det_re = 1.0 - (m[0] + m[3]) * c + (2.0 * TWO_PI * nu).cos();
    let det_im = -(m[0] + m[3]) * s + (2.0 * TWO_PI * nu).sin();
    let det = (det_re * det_re + det_im * det_im).sqrt();
    let scale = m.iter().map(|v| v.abs()).fold(1.0, f64::max);
    if det > 1e-5 * scale * scale {
        0
    } else if (m[0] - c).abs().max((m[3] - c).abs()).max(m[1].abs()).max(m[2].abs()) < 1e-5 * scale && s.abs() < 1e-12 {
        2
    } else {
        1
    }
}

/// Estimates `beta''(0)` of a degenerate curve by fitting
/// `(beta(h) - beta(0))/h^2 = a + c_1 h + c_2 h^2` at `h, 2h, 3h`.
pub fn second_derivative_at_zero(j: u32, nu: f64, branch: Option<Branch>, h: f64, tol: f64) -> Result<f64> {
    let b0 = beta_circular(j, nu);
    let d = |k: f64| -> Result<f64> { Ok((degenerate_beta(j, nu, branch, k * h, tol)? - b0) / (k * h).powi(2)) };
    let (d1, d2, d3) = (d(1.0)?, d(2.0)?, d(3.0)?);
    // Quadratic extrapolation to h = 0 through (h, d1), (2h, d2), (3h, d3).
    let a = 3.0 * d1 - 3.0 * d2 + d3;
    Ok(2.0 * a)
}

/// Monotonicity report of `ecc -> rho_e` at fixed `beta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    /// Mass parameter.
    pub beta: f64,
    /// `(ecc, rho_e)` pairs.
    pub samples: Vec<(f64, f64)>,
    /// Largest decrease between consecutive samples (`0` if none).
    pub worst_decrease: f64,
    /// `true` when no decrease exceeds `1e-8`.
    pub monotone: bool,
    /// Smallest `rho_e - (1 + sqrt(1 + 7 beta))` over samples with `ecc > 0`.
    pub min_excess: f64,
}

/// Checks that `rho_e` is non-decreasing in `ecc` and exceeds its circular value.
pub fn check_monotonicity(beta: f64, ecc_grid: &[f64]) -> Result<MonotonicityReport> {
    let base = 1.0 + (1.0 + 7.0 * beta).sqrt();
    let mut samples = Vec::new();
    for &e in ecc_grid {
        samples.push((e, rho_at(beta, e)? + 1.0));
    }
    let mut worst: f64 = 0.0;
    for w in samples.windows(2) {
        worst = worst.max(w[0].1 - w[1].1);
    }
    let min_excess = samples.iter().filter(|(e, _)| *e > 0.0).map(|(_, r)| r - base).fold(f64::INFINITY, f64::min);
    Ok(MonotonicityReport { beta, samples, worst_decrease: worst, monotone: worst <= 1e-8, min_excess })
}
