//! The quadratic forms `Q4(ν)` and `Q4⁺(ν)` built from the three-term recursion
//! `C_n A_n = (e/2)(A_{n-1} + A_{n+1})` of the Fourier coefficients of a
//! degenerate Hill solution, and the trace/determinant polynomials whose signs
//! make them negative definite.

use num::{One, Signed, Zero};
use rayon::prelude::*;

use super::bernstein::{certify_positive, CertifyOptions, IntervalBox};
use super::linalg::{self, congruence, inverse, mat_mul, Mat};
use super::poly::{parse_poly, q, qi, PolyQ, Q};
use super::{Certificate, Status};
use crate::error::{Error, Result};

/// `C_n(ν) = 7β/((n+ν)² - 1) - 1`, exactly.
pub fn eval_cn(beta: &Q, nu: &Q, n: i64) -> Result<Q> {
    let x = Q::from_integer(n.into()) + nu;
    let den = &x * &x - Q::one();
    if den.is_zero() {
        return Err(Error::Pole(format!("C_{n} has a pole at nu = {nu}")));
    }
    Ok(beta * qi(7) / den - Q::one())
}

fn mat2(a: Q, b: Q, c: Q, d: Q) -> Mat<Q> {
    vec![vec![a, b], vec![c, d]]
}

fn swap_n() -> Mat<Q> {
    mat2(Q::zero(), Q::one(), Q::one(), Q::zero())
}

/// Transfer matrix `M_n = [[2C_n/e, -1], [1, 0]]`.
pub fn m_n(beta: &Q, ecc: &Q, nu: &Q, n: i64) -> Result<Mat<Q>> {
    let c = eval_cn(beta, nu, n)?;
    Ok(mat2(c * qi(2) / ecc, -Q::one(), Q::one(), Q::zero()))
}

/// `S_k` mapping `(A_0, A_{-1})` to `(A_{k+1}, A_k)`.
pub fn s_k(beta: &Q, ecc: &Q, nu: &Q, k: i64) -> Result<Mat<Q>> {
    let mut s = linalg::identity::<Q>(2);
    if k >= 0 {
        for n in 0..=k {
            s = mat_mul(&m_n(beta, ecc, nu, n)?, &s);
        }
    } else if k <= -2 {
        let mut prod = linalg::identity::<Q>(2);
        for n in ((k + 1)..=-1).rev() {
            prod = mat_mul(&prod, &m_n(beta, ecc, nu, n)?);
        }
        s = inverse(&prod).ok_or_else(|| Error::Domain("transfer product singular".into()))?;
    }
    Ok(s)
}

/// `D_k = diag(C_{k+1}, C_k)`.
pub fn d_k(beta: &Q, nu: &Q, k: i64) -> Result<Mat<Q>> {
    Ok(mat2(eval_cn(beta, nu, k + 1)?, Q::zero(), Q::zero(), eval_cn(beta, nu, k)?))
}

fn term(beta: &Q, ecc: &Q, nu: &Q, k: i64) -> Result<Mat<Q>> {
    Ok(congruence(&d_k(beta, nu, k)?, &s_k(beta, ecc, nu, k)?))
}

/// `Q4⁺(ν) = diag(C_0, 0) + S_1ᵀD_1S_1 + S_3ᵀD_3S_3`.
pub fn q4_plus(beta: &Q, ecc: &Q, nu: &Q) -> Result<Mat<Q>> {
    let base = mat2(eval_cn(beta, nu, 0)?, Q::zero(), Q::zero(), Q::zero());
    Ok(linalg::add(&linalg::add(&base, &term(beta, ecc, nu, 1)?), &term(beta, ecc, nu, 3)?))
}

/// `Q4(ν) = Σ_{k ∈ {-5,-3,-1,1,3}} S_kᵀD_kS_k`.
pub fn q4(beta: &Q, ecc: &Q, nu: &Q) -> Result<Mat<Q>> {
    let mut acc = linalg::zeros::<Q>(2, 2);
    for k in [-5, -3, -1, 1, 3] {
        acc = linalg::add(&acc, &term(beta, ecc, nu, k)?);
    }
    Ok(acc)
}

/// Everything computed by [`check_q4`].
#[derive(Debug, Clone)]
pub struct Q4Data {
    /// `Q4(ν)`.
    pub q4: Mat<Q>,
    /// `Q4⁺(ν)`.
    pub q4_plus: Mat<Q>,
    /// `N Q4⁺(1-ν) N`.
    pub q4_plus_mirror: Mat<Q>,
    /// `e⁴ (S_1⁻¹)ᵀ Q4⁺ S_1⁻¹`.
    pub q4_tilde_scaled: Mat<Q>,
    /// `(d_1, d_2, d_3)` from the closed formulas.
    pub d: [Q; 3],
    /// `(tr_0, tr_1, tr_2)`.
    pub tr: [Q; 3],
    /// `(det_1, det_2, det_3, det_4)`.
    pub det: [Q; 4],
    /// `Q4(ν) = Q4⁺(ν) + N Q4⁺(1-ν) N` holds exactly.
    pub symmetry_holds: bool,
    /// The scaled conjugate of `Q4⁺` equals `[[d_1, d_2], [d_2, d_3]]`.
    pub d_formulas_hold: bool,
    /// `tr` and `det` of the conjugate agree with the `tr_i`, `det_j` expansions.
    pub tr_det_formulas_hold: bool,
}

/// The coefficients `C_0, …, C_4`.
pub fn c0_to_c4(beta: &Q, nu: &Q) -> Result<[Q; 5]> {
    Ok([eval_cn(beta, nu, 0)?, eval_cn(beta, nu, 1)?, eval_cn(beta, nu, 2)?, eval_cn(beta, nu, 3)?, eval_cn(beta, nu, 4)?])
}

/// `(d_1, d_2, d_3)` with `e = 𝔢²`.
pub fn d_formulas(c: &[Q; 5], ecc: &Q) -> [Q; 3] {
    let [c0, c1, c2, c3, c4] = c;
    let e = ecc * ecc;
    let d1 = qi(16) * c2 * c2 * c3 * c3 * c4 + (qi(4) * c2 * c2 * c3 - qi(8) * c2 * c3 * c4) * &e + (c0 + c2 + c4) * &e * &e;
    let d2 = ecc * (qi(-8) * c2 * c3 * c3 * c4 - qi(2) * (c0 * c1 + c3 * (c2 - c4)) * &e);
    let d3 = &e * (qi(4) * c0 * c1 * c1 + qi(4) * c3 * c3 * c4 + (c1 + c3) * &e);
    [d1, d2, d3]
}

/// `(tr_0, tr_1, tr_2)`.
pub fn tr_formulas(c: &[Q; 5]) -> [Q; 3] {
    let [c0, c1, c2, c3, c4] = c;
    [
        qi(16) * c2 * c2 * c3 * c3 * c4,
        qi(4) * (c0 * c1 * c1 + c3 * c3 * c4 + c2 * c2 * c3 - qi(2) * c2 * c3 * c4),
        c0 + c1 + c2 + c3 + c4,
    ]
}

/// `(det_1, det_2, det_3, det_4)`.
pub fn det_formulas(c: &[Q; 5]) -> [Q; 4] {
    let [c0, c1, c2, c3, c4] = c;
    let det1 = qi(64) * c0 * c1 * c1 * c2 * c2 * c3 * c3 * c4;
    let det2 = qi(16) * c1 * c2 * c3 * (c0 * c1 * c2 - qi(2) * c0 * c1 * c4 - qi(2) * c0 * c3 * c4 + c2 * c3 * c4);
    let x = c0 * c1 + c3 * (c2 - c4);
    let det3 = qi(4) * c2 * c3 * (c1 + c3) * (c2 - qi(2) * c4) + qi(4) * (c0 + c2 + c4) * (c0 * c1 * c1 + c3 * c3 * c4) - qi(4) * &x * &x;
    let det4 = (c1 + c3) * (c0 + c2 + c4);
    [det1, det2, det3, det4]
}

fn check_domain(beta: &Q, ecc: &Q, nu: &Q) -> Result<()> {
    let zero = Q::zero();
    let one = Q::one();
    for (name, v) in [("beta", beta), ("ecc", ecc), ("nu", nu)] {
        if !(*v > zero && *v < one) {
            return Err(Error::Domain(format!("{name} = {v} not in (0, 1)")));
        }
    }
    Ok(())
}

/// Builds all quantities at an exact rational point.
pub fn q4_data(beta: &Q, ecc: &Q, nu: &Q) -> Result<Q4Data> {
    check_domain(beta, ecc, nu)?;
    let one = Q::one();
    let q4m = q4(beta, ecc, nu)?;
    let qp = q4_plus(beta, ecc, nu)?;
    let mirror = congruence(&q4_plus(beta, ecc, &(&one - nu))?, &swap_n());
    let symmetry_holds = linalg::add(&qp, &mirror) == q4m;
    let s1_inv = inverse(&s_k(beta, ecc, nu, 1)?).ok_or_else(|| Error::Domain("S_1 singular".into()))?;
    let e2 = ecc * ecc;
    let tilde = linalg::scale(&congruence(&qp, &s1_inv), &(&e2 * &e2));
    let c = c0_to_c4(beta, nu)?;
    let d = d_formulas(&c, ecc);
    let d_formulas_hold = tilde == mat2(d[0].clone(), d[1].clone(), d[1].clone(), d[2].clone());
    let tr = tr_formulas(&c);
    let det = det_formulas(&c);
    // With e = 𝔢², tilde = e² Q̃ where tr Q̃ = e⁻²(tr_0 + tr_1 e + tr_2 e²) and
    // det Q̃ = e⁻³(det_1 + … + det_4 e³).
    let tr_poly = &tr[0] + &tr[1] * &e2 + &tr[2] * &e2 * &e2;
    let det_poly = &det[0] + &det[1] * &e2 + &det[2] * &e2 * &e2 + &det[3] * &e2 * &e2 * &e2;
    let tr_det_formulas_hold = linalg::trace(&tilde) == tr_poly && linalg::det(&tilde) == &det_poly * &e2;
    Ok(Q4Data {
        q4: q4m,
        q4_plus: qp,
        q4_plus_mirror: mirror,
        q4_tilde_scaled: tilde,
        d,
        tr,
        det,
        symmetry_holds,
        d_formulas_hold,
        tr_det_formulas_hold,
    })
}

fn negative_definite(m: &Mat<Q>) -> bool {
    linalg::trace(m).is_negative() && linalg::det(m).is_positive()
}

/// Verifies at an exact point that `Q4⁺(ν)` and `Q4(ν)` are negative definite
/// (`tr < 0`, `det > 0`), together with the exact symmetry identity and the
/// closed formulas for the conjugated form.
pub fn check_q4(beta: &Q, ecc: &Q, nu: &Q) -> Result<Certificate> {
    let data = q4_data(beta, ecc, nu)?;
    let claim = format!("Q4+(nu) and Q4(nu) negative definite at beta = {beta}, e = {ecc}, nu = {nu}");
    let witness = vec![beta.to_string(), ecc.to_string(), nu.to_string()];
    let status = if !data.symmetry_holds || !data.d_formulas_hold || !data.tr_det_formulas_hold {
        Status::Refuted { witness, value: "closed-form identity mismatch".into() }
    } else if !negative_definite(&data.q4_plus) {
        Status::Refuted { witness, value: format!("tr = {}, det = {}", linalg::trace(&data.q4_plus), linalg::det(&data.q4_plus)) }
    } else if !negative_definite(&data.q4) {
        Status::Refuted { witness, value: format!("tr = {}, det = {}", linalg::trace(&data.q4), linalg::det(&data.q4)) }
    } else {
        Status::Proved
    };
    Ok(Certificate { claim, status, boxes_used: 1 })
}

/// Variables of the box certification.
pub const Q4_VARS: [&str; 3] = ["beta", "nu", "e"];

/// Numerator and denominator of `C_n` as polynomials in `(β, ν, e)`:
/// `C_n = (7β - (n+ν)² + 1)/((n+ν)² - 1)`.
fn cn_parts(n: i64) -> (PolyQ, PolyQ) {
    let x = format!("({n} + nu)");
    let num = parse_poly(&format!("7*beta - {x}^2 + 1"), &Q4_VARS).expect("static expression");
    let den = parse_poly(&format!("{x}^2 - 1"), &Q4_VARS).expect("static expression");
    (num, den)
}

/// Replaces every `C_n^k` by `p_n^k q_n^(2-k)`, i.e. multiplies by `Π q_n²`
/// (a positive factor) to clear denominators.
fn clear_denominators(p: &PolyQ) -> PolyQ {
    let parts: Vec<(PolyQ, PolyQ)> = (0..5).map(cn_parts).collect();
    let e_var = PolyQ::var(&Q4_VARS, 2);
    let mut out = PolyQ::zero(&Q4_VARS);
    for (exps, coef) in p.terms() {
        let mut t = PolyQ::constant(&Q4_VARS, coef.clone());
        for (n, (num, den)) in parts.iter().enumerate() {
            let k = exps[n];
            assert!(k <= 2, "exponent of C_{n} above 2");
            t = t.mul(&num.pow(k)).mul(&den.pow(2 - k));
        }
        t = t.mul(&e_var.pow(exps[5]));
        out = out.add(&t);
    }
    out
}

/// Variables of expressions in the coefficients `C_0, …, C_4` and `e = 𝔢²`.
pub const CN_VARS: [&str; 6] = ["c0", "c1", "c2", "c3", "c4", "e"];

/// Parses an expression in `c0, …, c4, e` (each `c_n` of degree at most two)
/// and returns it times `Π q_n²` as a polynomial in `(β, ν, e)`.
pub fn cleared_polynomial(src: &str) -> Result<PolyQ> {
    let p = parse_poly(src, &CN_VARS)?;
    if (0..5).any(|n| p.degree_in(n) > 2) {
        return Err(Error::Domain(format!("some C_n has degree above 2 in {src}")));
    }
    Ok(clear_denominators(&p))
}

/// `-(tr_0 + tr_1 e + tr_2 e²) Π q_n²` and `(det_1 + det_2 e + det_3 e² + det_4 e³) Π q_n²`
/// as polynomials in `(β, ν, e)`.
pub fn tr_det_polynomials() -> (PolyQ, PolyQ) {
    let tr = cleared_polynomial("-(16*c2^2*c3^2*c4 + 4*(c0*c1^2 + c3^2*c4 + c2^2*c3 - 2*c2*c3*c4)*e + (c0 + c1 + c2 + c3 + c4)*e^2)")
        .expect("static expression");
    let det = cleared_polynomial(
        "64*c0*c1^2*c2^2*c3^2*c4 \
         + 16*c1*c2*c3*(c0*c1*c2 - 2*c0*c1*c4 - 2*c0*c3*c4 + c2*c3*c4)*e \
         + (4*c2*c3*(c1 + c3)*(c2 - 2*c4) + 4*(c0 + c2 + c4)*(c0*c1^2 + c3^2*c4) - 4*(c0*c1 + c3*(c2 - c4))^2)*e^2 \
         + (c1 + c3)*(c0 + c2 + c4)*e^3",
    )
    .expect("static expression");
    (tr, det)
}

/// Certifies `tr < 0` and `det > 0` of the conjugated `Q4⁺` on the box
/// `β ∈ [1/10, 9/10]`, `ν ∈ [1/10, 9/10]`, `e = 𝔢² ∈ [1/100, 81/100]`.
pub fn certify_q4_box(opts: CertifyOptions) -> Vec<Certificate> {
    let (tr, det) = tr_det_polynomials();
    let dom = IntervalBox::closed(vec![q(1, 10), q(1, 10), q(1, 100)], vec![q(9, 10), q(9, 10), q(81, 100)]);
    let items = [("-(tr_0 + tr_1 e + tr_2 e^2) * prod q_n^2", tr), ("(det_1 + det_2 e + det_3 e^2 + det_4 e^3) * prod q_n^2", det)];
    items.par_iter().map(|(name, p)| certify_positive(name, p, &dom, opts)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transfer_matrices_are_unimodular() {
        let (b, e, nu) = (q(3, 10), q(1, 2), q(3, 10));
        for k in [-5, -3, -1, 0, 1, 3] {
            assert_eq!(linalg::det(&s_k(&b, &e, &nu, k).unwrap()), Q::one());
        }
    }

    #[test]
    fn pole_detection() {
        assert!(matches!(eval_cn(&q(1, 2), &Q::zero(), 1), Err(Error::Pole(_))));
        assert!(q4_data(&q(1, 2), &q(1, 2), &Q::one()).is_err());
    }
}
