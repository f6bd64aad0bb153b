//! Scalar root finding: bisection and Brent's method on a sign-changing bracket.

use crate::error::{Error, Result};

/// Bisection for a predicate that flips from `false` at `lo` to `true` at `hi`.
///
/// Returns the final bracket `(lo, hi)` once `|hi - lo| <= tol`.
pub fn bisect_predicate<P: FnMut(f64) -> Result<bool>>(mut pred: P, mut lo: f64, mut hi: f64, tol: f64) -> Result<(f64, f64)> {
    if pred(lo)? || !pred(hi)? {
        return Err(Error::Root(format!("predicate not bracketed on [{lo}, {hi}]")));
    }
    while (hi - lo).abs() > tol {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if pred(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo, hi))
}

/// Brent's method on `[a, b]` with `f(a) f(b) <= 0`.
pub fn brent<F: FnMut(f64) -> Result<f64>>(mut f: F, a: f64, b: f64, xtol: f64) -> Result<f64> {
    let (mut a, mut b) = (a, b);
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa * fb > 0.0 {
        return Err(Error::Root(format!("no sign change on [{a}, {b}]: f = {fa:e}, {fb:e}")));
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..300 {
        if fb * fc > 0.0 {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            if 2.0 * p < (3.0 * xm * q - (tol1 * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b)?;
    }
    Err(Error::Root("Brent iteration limit".into()))
}

/// Scans `[a, b]` with `n` equal cells and returns every bracket with a sign change.
pub fn scan_brackets<F: FnMut(f64) -> Result<f64>>(mut f: F, a: f64, b: f64, n: usize) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    let mut x0 = a;
    let mut f0 = f(a)?;
    for i in 1..=n {
        let x1 = a + (b - a) * i as f64 / n as f64;
        let f1 = f(x1)?;
        if f0 == 0.0 || f0 * f1 < 0.0 {
            out.push((x0, x1));
        }
        x0 = x1;
        f0 = f1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_cubic() {
        let r = brent(|x| Ok(x * x * x - 2.0), 0.0, 2.0, 1e-15).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-14);
    }

    #[test]
    fn brent_requires_bracket() {
        assert!(brent(|x| Ok(x * x + 1.0), -1.0, 1.0, 1e-12).is_err());
    }

    #[test]
    fn predicate_bisection() {
        let (lo, hi) = bisect_predicate(|x| Ok(x > 0.3), 0.0, 1.0, 1e-12).unwrap();
        assert!(lo <= 0.3 && hi > 0.3 && hi - lo <= 1e-12);
    }

    #[test]
    fn scanning() {
        let b = scan_brackets(|x: f64| Ok(x.sin()), 0.5, 10.0, 100).unwrap();
        assert_eq!(b.len(), 3);
    }
}
