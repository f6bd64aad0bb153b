//! Contact volume of the energy surface and the quantities built from it.
//!
//! The volume of the (double-covered) energy surface `H = -1` with respect to
//! `lambda ^ d lambda` reduces to an integral over the Hill region,
//!
//! `vol = 8 pi int_{r_-}^{r_+} int_0^{z_+(r)} (-1 - V(r, z)) dz dr`,
//!
//! which has no closed form.  Replacing the mutual-attraction term by the
//! potential `V_2 = varpi^2/(2 r^2) - 1/(beta sqrt(r^2 + (1 + 7 beta) z^2))`
//! (which bounds `V` from above on the Hill region) gives a comparison
//! surface whose volume is `T_e^2 / sqrt(1 + 7 beta)`, where `T_e` is the
//! action of the Euler orbit.  Together with the rotation number `rho_e` this
//! yields the chain `vol > T_e^2/sqrt(1+7 beta) > T_e^2/(rho_e - 1)` and the
//! twist interval `[1/(rho_e - 1), vol/T_e^2]`.
//!
//! None of the reported quantities depends on the choice of contact form:
//! only the volume and the Euler action enter.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow;
use crate::hill;
use crate::params::Params;
use crate::quad;

/// Points with `beta^2 + ecc^2` above this value are flagged as near-critical.
pub const NEAR_CRITICAL: f64 = 0.98;

/// Default relative tolerance of [`vol_quadrature`].
pub const DEFAULT_TOL: f64 = 1e-9;

/// Closed-form volume `2 pi^2 (1 - sqrt(2) varpi beta)^2 / (beta^2 sqrt(1 + 7 beta))`
/// of the comparison surface built from `V_2`.
pub fn vol_comparison(p: &Params) -> Result<f64> {
    p.require_subcritical()?;
    let d = 1.0 - 2f64.sqrt() * p.varpi * p.beta;
    Ok(2.0 * PI * PI * d * d / (p.beta * p.beta * p.c0()))
}

/// Which potential the volume integrand uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Integrand {
    /// The true potential `V`; the Hill-region boundary comes from [`flow::HillRegion::z_plus`].
    Exact,
    /// The comparison potential `V_2` with its closed-form boundary.
    Comparison,
}

/// A quadrature value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    /// Value.
    pub value: f64,
    /// Absolute error estimate.
    pub error: f64,
}

/// Comparison potential `V_2(r, z)`.
pub fn potential_comparison(p: &Params, r: f64, z: f64) -> f64 {
    p.varpi * p.varpi / (2.0 * r * r) - 1.0 / (p.beta * (r * r + (1.0 + 7.0 * p.beta) * z * z).sqrt())
}

/// Height of the comparison region `{V_2 <= -1}` over `r in [r_-, r_+]`:
/// `r / sqrt(1 + 7 beta) * sqrt(4 r^2 / (beta^2 (varpi^2 + 2 r^2)^2) - 1)`.
pub fn z_plus_comparison(p: &Params, r: f64) -> f64 {
    let d = p.varpi * p.varpi + 2.0 * r * r;
    let s = 4.0 * r * r / (p.beta * p.beta * d * d) - 1.0;
    r / p.c0() * s.max(0.0).sqrt()
}

/// Volume of the energy surface (or of the comparison surface) by nested
/// adaptive Gauss–Kronrod quadrature with relative tolerance `tol`.
///
/// The outer integral uses `r = c - h cos(phi)` over `phi in [0, pi]`, which
/// removes the square-root behaviour of `z_+` at `r_-` and `r_+`.  Inner
/// integrals are computed to `tol / 10` and the outer one to `0.85 tol`; the
/// returned error is the outer estimate plus the largest relative inner error.
pub fn vol_quadrature_with(p: &Params, tol: f64, integrand: Integrand) -> Result<Estimate> {
    p.require_subcritical()?;
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance {tol} must be positive")));
    }
    let region = flow::hill_region(p);
    let (rm, rp) = (region.r_minus, region.r_plus);
    let (c, h) = (0.5 * (rm + rp), 0.5 * (rp - rm));
    let inner_tol = 0.1 * tol;
    // The integrand's z-dependent part is `coef z^2/(r q (r + q))` with
    // `q = sqrt(r^2 + stretch z^2)`.
    let (stretch, coef) = match integrand {
        Integrand::Exact => (p.one_plus_two_alpha(), p.four_over_alpha() * p.one_plus_two_alpha()),
        Integrand::Comparison => (1.0 + 7.0 * p.beta, (1.0 + 7.0 * p.beta) / p.beta),
    };
    let mut failure: Option<Error> = None;
    let mut inner_error = 0.0f64;
    let mut outer = |phi: f64| -> f64 {
        if failure.is_some() {
            return 0.0;
        }
        let r = (c - h * phi.cos()).clamp(rm, rp);
        let zp = match integrand {
            Integrand::Exact => region.z_plus(r),
            Integrand::Comparison => Ok(z_plus_comparison(p, r)),
        };
        let zp = match zp {
            Ok(z) if z.is_finite() => z,
            Ok(_) => {
                failure = Some(Error::Quadrature(format!("unbounded Hill region at r = {r}")));
                return 0.0;
            }
            Err(e) => {
                failure = Some(e);
                return 0.0;
            }
        };
        if zp == 0.0 {
            return 0.0;
        }
        // -1 - V(r, z) = (r - r_-)(r_+ - r)/r^2 - coef z^2/(r q (r + q)) without
        // cancellation; (r - r_-)(r_+ - r) = h^2 sin^2(phi) exactly.
        let radial = (h * phi.sin() / r).powi(2);
        let f = |z: f64| {
            let q = (r * r + stretch * z * z).sqrt();
            radial - coef * z * z / (r * q * (r + q))
        };
        match quad::integrate(f, 0.0, zp, 0.0, inner_tol) {
            Ok(q) => {
                inner_error = inner_error.max(q.error / q.value.abs().max(f64::MIN_POSITIVE));
                q.value * h * phi.sin()
            }
            Err(e) => {
                failure = Some(e);
                0.0
            }
        }
    };
    let q = quad::integrate(&mut outer, 0.0, PI, 0.0, 0.85 * tol)?;
    if let Some(e) = failure {
        return Err(e);
    }
    let value = 8.0 * PI * q.value;
    let error = 8.0 * PI * q.error + inner_error.max(inner_tol) * value.abs();
    if error > tol * value.abs() {
        return Err(Error::Quadrature(format!("error estimate {error:e} exceeds {tol:e} of {value}")));
    }
    Ok(Estimate { value, error })
}

/// Volume of the energy surface, `(value, error_estimate)`.
pub fn vol_quadrature(p: &Params, tol: f64) -> Result<(f64, f64)> {
    let e = vol_quadrature_with(p, tol, Integrand::Exact)?;
    Ok((e.value, e.error))
}

/// Upper bound on the volume obtained by passing to elliptic polar
/// coordinates, `8 sqrt(8) pi w^{3/4} (1-beta)^2/(beta^2 sqrt(1+7beta))
/// arctan sqrt((1 - sqrt(w) beta)/(beta (sqrt(w) - 1)))` with `w = 2 varpi^2`.
pub fn vol_upper_bound(p: &Params) -> Result<f64> {
    p.require_subcritical()?;
    let w = 2.0 * p.varpi * p.varpi;
    let sw = w.sqrt();
    let b = p.beta;
    let at = ((1.0 - sw * b) / (b * (sw - 1.0))).sqrt().atan();
    Ok(8.0 * 8f64.sqrt() * PI * w.powf(0.75) * (1.0 - b) * (1.0 - b) / (b * b * p.c0()) * at)
}

/// Limit of [`vol_upper_bound`] as the point approaches the critical curve:
/// `8 sqrt(2) pi^2 (1 - beta)^2 / (beta^2 sqrt(1 + 7 beta))`.
pub fn critical_volume_cap(beta: f64) -> f64 {
    8.0 * 2f64.sqrt() * PI * PI * (1.0 - beta) * (1.0 - beta) / (beta * beta * (1.0 + 7.0 * beta).sqrt())
}

/// One term of an inequality chain with its margin `lhs - rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    /// Larger side.
    pub lhs: f64,
    /// Smaller side.
    pub rhs: f64,
    /// `lhs - rhs`.
    pub margin: f64,
    /// `true` when `margin` exceeds the numerical error of the two sides.
    pub holds: bool,
}

impl Comparison {
    fn new(lhs: f64, rhs: f64, err: f64) -> Self {
        Self { lhs, rhs, margin: lhs - rhs, holds: lhs - rhs > err }
    }
}

/// Sample `(k, (vol - eps) sqrt(2 k))` of the Weyl-law lower-bound curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeylPoint {
    /// Index of the spectral invariant.
    pub k: u32,
    /// Lower bound for large `k`.
    pub bound: f64,
}

/// Volume data of one parameter point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeReport {
    /// `beta`.
    pub beta: f64,
    /// Euler eccentricity.
    pub ecc: f64,
    /// Action of the Euler orbit.
    #[serde(rename = "T_e")]
    pub t_e: f64,
    /// Closed-form comparison volume.
    pub vol_m2: f64,
    /// Quadrature value of the volume.
    pub vol_m: Estimate,
    /// Rotation number of the Euler orbit.
    pub rho_e: f64,
    /// `sqrt(1 + 7 beta)`.
    pub c0: f64,
    /// `vol > T_e^2 / sqrt(1 + 7 beta)`.
    pub volume_vs_comparison: Comparison,
    /// `T_e^2 / sqrt(1 + 7 beta) > T_e^2 / (rho_e - 1)`.
    pub comparison_vs_rotation: Comparison,
    /// Twist interval `[1/(rho_e - 1), vol/T_e^2]`.
    pub twist_interval: [f64; 2],
    /// `T_e^2 / vol`, an upper bound for the systolic ratio since the
    /// minimal action is at most `T_e`.
    pub systolic_proxy: f64,
    /// `sqrt(1 + 7 beta) > T_e^2 / vol`.
    pub systolic_bound: Comparison,
    /// Weyl-law lower-bound curve `k -> (vol - eps) sqrt(2 k)`.
    pub weyl_curve: Vec<WeylPoint>,
    /// `eps` used for [`VolumeReport::weyl_curve`].
    pub weyl_eps: f64,
    /// Warnings (near-critical points).
    pub warnings: Vec<String>,
}

/// Options for [`inequality_report_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportOptions {
    /// Relative tolerance of the volume quadrature.
    pub tol: f64,
    /// Largest `k` on the Weyl curve.
    pub weyl_k_max: u32,
    /// `eps` on the Weyl curve.
    pub weyl_eps: f64,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, weyl_k_max: 10, weyl_eps: 1e-3 }
    }
}

/// Assembles the [`VolumeReport`] of a subcritical point with default options.
pub fn inequality_report(p: &Params) -> Result<VolumeReport> {
    inequality_report_with(p, &ReportOptions::default())
}

/// Assembles the [`VolumeReport`] of a subcritical point.
pub fn inequality_report_with(p: &Params, opts: &ReportOptions) -> Result<VolumeReport> {
    p.require_subcritical()?;
    let mut warnings = Vec::new();
    let s = p.beta * p.beta + p.ecc * p.ecc;
    if s > NEAR_CRITICAL {
        warnings.push(format!(
            "near-critical point (beta^2 + ecc^2 = {s:.6} > {NEAR_CRITICAL}): the Hill region is very tall near r = 1/2 and the quadrature error estimate is less reliable"
        ));
    }
    let t_e = flow::euler_period(p);
    let vol_m2 = vol_comparison(p)?;
    let vol_m = vol_quadrature_with(p, opts.tol, Integrand::Exact)?;
    let rho_e = hill::euler_rotation_number(p)?;
    let c0 = p.c0();
    let t2 = t_e * t_e;
    let cmp_err = 1e-12 * t2;
    let weyl_curve = (1..=opts.weyl_k_max)
        .map(|k| WeylPoint { k, bound: (vol_m.value - opts.weyl_eps) * (2.0 * k as f64).sqrt() })
        .collect();
    let systolic_proxy = t2 / vol_m.value;
    Ok(VolumeReport {
        beta: p.beta,
        ecc: p.ecc,
        t_e,
        vol_m2,
        vol_m,
        rho_e,
        c0,
        volume_vs_comparison: Comparison::new(vol_m.value, vol_m2, vol_m.error),
        comparison_vs_rotation: Comparison::new(t2 / c0, t2 / (rho_e - 1.0), cmp_err),
        twist_interval: [1.0 / (rho_e - 1.0), vol_m.value / t2],
        systolic_proxy,
        systolic_bound: Comparison::new(c0, systolic_proxy, systolic_proxy * vol_m.error / vol_m.value),
        weyl_curve,
        weyl_eps: opts.weyl_eps,
        warnings,
    })
}

/// One row of a `(beta, ecc)` sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// `beta`.
    pub beta: f64,
    /// Euler eccentricity.
    pub ecc: f64,
    /// Euler action.
    #[serde(rename = "T")]
    pub t: f64,
    /// Comparison volume.
    pub vol_m2: f64,
    /// Volume.
    pub vol_m: f64,
    /// Rotation number of the Euler orbit.
    pub rho: f64,
    /// Left end of the twist interval.
    pub i_left: f64,
    /// Right end of the twist interval.
    pub i_right: f64,
}

/// Computes the sweep rows of all subcritical points of `points` in parallel;
/// points outside the subcritical regime are skipped.
pub fn sweep(points: &[(f64, f64)], tol: f64) -> Result<Vec<SweepRow>> {
    let opts = ReportOptions { tol, weyl_k_max: 0, ..ReportOptions::default() };
    points
        .par_iter()
        .filter_map(|&(b, e)| {
            let p = match Params::from_beta_ecc(b, e) {
                Ok(p) => p,
                Err(err) => return Some(Err(err)),
            };
            p.require_subcritical().ok()?;
            Some(inequality_report_with(&p, &opts).map(|r| SweepRow {
                beta: b,
                ecc: e,
                t: r.t_e,
                vol_m2: r.vol_m2,
                vol_m: r.vol_m.value,
                rho: r.rho_e,
                i_left: r.twist_interval[0],
                i_right: r.twist_interval[1],
            }))
        })
        .collect()
}

/// Writes sweep rows as CSV with header `beta,ecc,T,vol_M2,vol_M,rho,I_left,I_right`.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "beta,ecc,T,vol_M2,vol_M,rho,I_left,I_right")?;
    for r in rows {
        writeln!(w, "{},{},{},{},{},{},{},{}", r.beta, r.ecc, r.t, r.vol_m2, r.vol_m, r.rho, r.i_left, r.i_right)?;
    }
    Ok(())
}
