//! The positivity ledger: polynomials in `(b, ν)` loaded from a checked-in data
//! file, their certificates, and exact spot checks tying them back to the
//! coefficients `C_n`.

use num::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::bernstein::{certify_positive, CertifyOptions, IntervalBox};
use super::poly::{parse_definitions, parse_poly, q, q_to_f64, qi, PolyQ, Q};
use super::q4::{c0_to_c4, det_formulas};
use super::Certificate;
use crate::error::{Error, Result};

/// Contents of the data file.
pub const LEDGER_SOURCE: &str = include_str!("../../data/appendix_c.txt");

/// SHA-256 of [`LEDGER_SOURCE`] at the time of transcription.
pub const LEDGER_SHA256: &str = "93aa071f2abbc524a8fab37f022eaaeb4623008726e2f872e340fa783af2f9a4";

/// Variables of the ledger polynomials.
pub const LEDGER_VARS: [&str; 2] = ["b", "nu"];

/// Hex SHA-256 of a string.
pub fn sha256_hex(s: &str) -> String {
    Sha256::digest(s.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Parses the ledger after verifying its checksum.
pub fn appendix_polynomials() -> Result<Vec<(String, PolyQ)>> {
    let digest = sha256_hex(LEDGER_SOURCE);
    if digest != LEDGER_SHA256 {
        return Err(Error::Parse(format!("ledger checksum mismatch: {digest}")));
    }
    parse_definitions(LEDGER_SOURCE, &LEDGER_VARS)
}

/// Looks up one ledger polynomial by name.
pub fn ledger_polynomial(name: &str) -> Result<PolyQ> {
    appendix_polynomials()?
        .into_iter()
        .find(|(n, _)| n == name)
        .map(|(_, p)| p)
        .ok_or_else(|| Error::Parse(format!("no polynomial named {name}")))
}

/// Domain of a ledger entry: `b ∈ [0, 3/7]` closed (or the single value `3/7`
/// for the restricted entries), `ν ∈ (0, 1)` open.
pub fn ledger_domain(name: &str) -> IntervalBox {
    let (lo, hi) = if name.ends_with("_at_three_sevenths") { (q(3, 7), q(3, 7)) } else { (Q::zero(), q(3, 7)) };
    IntervalBox::closed(vec![lo, Q::zero()], vec![hi, Q::one()]).with_open(1, true, true)
}

/// Certifies every ledger entry (in parallel).
pub fn appendix_ledger(opts: CertifyOptions) -> Result<Vec<Certificate>> {
    let polys = appendix_polynomials()?;
    Ok(polys.par_iter().map(|(name, p)| certify_positive(name, p, &ledger_domain(name), opts)).collect())
}

/// Result of one exact identity check at a rational point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpotCheck {
    /// Identity being checked.
    pub name: String,
    /// The point, as `(b, nu)` or `(beta, ...)` depending on the identity.
    pub point: Vec<String>,
    /// Left-hand side (exact).
    pub lhs: String,
    /// Right-hand side (exact).
    pub rhs: String,
    /// `lhs / rhs` as a float (diagnostic).
    pub ratio: f64,
    /// Whether both sides agree exactly.
    pub holds: bool,
}

fn spot(name: &str, point: &[&Q], lhs: Q, rhs: Q) -> SpotCheck {
    let ratio = if rhs.is_zero() { f64::NAN } else { q_to_f64(&(&lhs / &rhs)) };
    SpotCheck {
        name: name.into(),
        point: point.iter().map(|x| x.to_string()).collect(),
        holds: lhs == rhs,
        lhs: lhs.to_string(),
        rhs: rhs.to_string(),
        ratio,
    }
}

fn nu_poly(src: &str, nu: &Q) -> Q {
    parse_poly(src, &["nu"]).expect("static expression").eval(std::slice::from_ref(nu))
}

fn pw(x: &Q, k: u32) -> Q {
    num::pow(x.clone(), k as usize)
}

/// Exact checks of the ledger and of the auxiliary closed forms at the given
/// `(b, ν)` points, where `β = b + (4ν + ν²)/7`.
pub fn transcription_checks(points: &[(Q, Q)]) -> Result<Vec<SpotCheck>> {
    let polys = appendix_polynomials()?;
    let get = |n: &str| polys.iter().find(|(m, _)| m == n).map(|(_, p)| p.clone()).ok_or_else(|| Error::Parse(format!("missing {n}")));
    let names_i = ["I0", "I1", "I2", "I3", "I4", "I5", "I6"];
    let names_j = ["J0", "J1", "J2", "J3", "J4", "J5", "J6", "J7", "J8"];
    let names_k = ["K0", "K1", "K2", "K3"];
    let ip: Vec<PolyQ> = names_i.iter().map(|n| get(n)).collect::<Result<_>>()?;
    let jp: Vec<PolyQ> = names_j.iter().map(|n| get(n)).collect::<Result<_>>()?;
    let kp: Vec<PolyQ> = names_k.iter().map(|n| get(n)).collect::<Result<_>>()?;
    let one = Q::one();
    let mut out = Vec::new();

    // Restricted entries agree with the general ones at b = 3/7.
    for (gen, res) in [("I4", "I4_at_three_sevenths"), ("K2", "K2_at_three_sevenths")] {
        let a = get(gen)?.fix(0, &q(3, 7));
        let b = get(res)?;
        for (_, nu) in points {
            let x = [Q::zero(), nu.clone()];
            out.push(spot(&format!("{gen}(3/7, nu) = {res}"), &[nu], a.eval(&x), b.eval(&x)));
        }
    }

    for (b, nu) in points {
        let beta = b + (qi(4) * nu + nu * nu) / qi(7);
        let c = c0_to_c4(&beta, nu)?;
        let [c0, c1, c2, c3, c4] = &c;
        let [det1, det2, det3, det4] = det_formulas(&c);
        let det2c = c0 * c1 * c2 - qi(2) * c0 * c1 * c4 - qi(2) * c0 * c3 * c4 + c2 * c3 * c4;
        let x = [b.clone(), nu.clone()];
        let iv: Vec<Q> = ip.iter().map(|p| p.eval(&x)).collect();
        let jv: Vec<Q> = jp.iter().map(|p| p.eval(&x)).collect();
        let kv: Vec<Q> = kp.iter().map(|p| p.eval(&x)).collect();
        let s = b * qi(7) / qi(3);
        let t = &one - &s;
        let f = |k: i64| nu + qi(k);
        let om = &one - nu;
        let pt = [b, nu];

        // D43
        let lhs = qi(64) * c1 * c3 * (c0 + c2 + c4) - nu * &det3;
        let num = &kv[0] + &kv[1] * b * (&one - b) + &kv[2] * pw(b, 3) + &kv[3] * pw(b, 2) * pw(&(&one - b), 2);
        let den = &om * nu * pw(&f(1), 2) * pw(&f(2), 2) * pw(&f(3), 2) * pw(&f(4), 2) * f(5);
        out.push(spot("D43 expansion in K_i", &pt, lhs.clone(), qi(12) * num / den));
        let d43 = lhs;

        // D41
        let lhs = qi(64) * c1 * c1 * (qi(4) * c3 * c3 * (c0 * c4 * &det3 - &det2c * &det2c) + qi(19) * c2 * c3 * (c3 + c4) * (c0 + c2 + c4) * &det2c);
        let bracket = &iv[0] * pw(&beta, 4)
            + (&iv[1] + (&iv[2] + &iv[3] * &t) * pw(&s, 4) + &iv[4] * pw(&s, 2) * pw(&t, 2) + (&iv[5] + &iv[6] * &s) * pw(&t, 4)) * (&one - &beta);
        let den = qi(343) * pw(&om, 2) * pw(nu, 2) * pw(&f(1), 3) * pw(&f(2), 3) * pw(&f(3), 3) * pw(&f(4), 3) * pw(&f(5), 3);
        out.push(spot("D41 expansion in I_i", &pt, lhs.clone(), qi(128) * c1 * c1 * c2 * c3 * bracket / den));
        let d41 = lhs;

        // D42
        let lhs = qi(76) * c1 * c2 * c2 * (c3 + c4) * (c0 + c2 + c4) * &det3 + nu * c2 * (c1 + c3) * &det2 * &det2c + qi(18) * &det1 * &det4;
        let bracket = (&jv[0] + &jv[1] * &s + &jv[2] * &s * &t) * pw(&s, 3) * &t
            + (&jv[3] + pw(&s, 5) * &jv[4]) * pw(&t, 3)
            + (&jv[5] + &jv[6] * &s + &jv[7] * pw(&s, 3)) * &s * pw(&t, 4)
            + &jv[8] * pw(&s, 3) * pw(&t, 5);
        let den = pw(&om, 2) * pw(nu, 2) * pw(&f(1), 4) * pw(&f(2), 3) * pw(&f(3), 4) * pw(&f(4), 4) * pw(&f(5), 3);
        let j_expansion = qi(16) * c1 * c2 * c2 * bracket / den;
        out.push(spot("D42 expansion in J_i", &pt, lhs.clone(), j_expansion.clone()));
        let d42 = lhs;

        // Decomposition of the discriminant-type quantity D*_4.
        let dstar = qi(4) * &det1 * pw(&det3, 3) + qi(4) * pw(&det2, 3) * &det4 - pw(&det2, 2) * pw(&det3, 2) - qi(18) * &det1 * &det2 * &det3 * &det4
            + qi(27) * pw(&det1, 2) * pw(&det4, 2);
        let rest = c2 * c2 * pw(&det3, 2) * &d41 + (c1 + c3) * pw(&det2, 3) / (qi(16) * c1 * c3) * &d43 + qi(27) * pw(&det1, 2) * pw(&det4, 2);
        let split = &rest - &det2 * &det3 * &d42;
        out.push(spot("D*4 = split into D41, D42, D43", &pt, dstar.clone(), split));
        // The split forces the middle term to be 76(..)det3 - nu C2 (C1+C3) det2 det2c + 18 det1 det4.
        let d42_forced = qi(76) * c1 * c2 * c2 * (c3 + c4) * (c0 + c2 + c4) * &det3 - nu * c2 * (c1 + c3) * &det2 * &det2c + qi(18) * &det1 * &det4;
        let split = &rest - &det2 * &det3 * &d42_forced;
        out.push(spot("D*4 = split with sign-consistent D42", &pt, dstar, split));
        out.push(spot("sign-consistent D42 expansion in J_i", &pt, d42_forced, j_expansion));

        // det_2 factorisation.
        out.push(spot("det2 = 16 C1 C2 C3 det2c", &pt, det2.clone(), qi(16) * c1 * c2 * c3 * &det2c));

        // det21 cubic in beta.
        let lhs = q(1, 2) * &om * nu * pw(&f(1), 2) * pw(&f(3), 2) * f(4) * f(5) * &det2c;
        let rhs = &om * nu * pw(&f(1), 2) * pw(&f(3), 2) * f(4) * f(5)
            + qi(21) * f(1) * f(3) * nu_poly("-5 + 32*nu + 24*nu^2 + 8*nu^3 + nu^4", nu) * &beta
            - qi(49) * nu_poly("54 + 92*nu + 71*nu^2 + 24*nu^3 + 3*nu^4", nu) * pw(&beta, 2)
            + qi(343) * nu_poly("-9 + 4*nu + nu^2", nu) * pw(&beta, 3);
        out.push(spot("det21 cubic in beta", &pt, lhs, rhs));

        // F0 cubic in beta.
        let lhs = pw(&f(1), 2) * f(2) * pw(&f(3), 2) * f(4) * (qi(4) * c2 * c2 * c3 + c3 - qi(2) * c2);
        let rhs = nu_poly("-3*(3 + 4*nu + nu^2)^2*(8 + 6*nu + nu^2)", nu)
            + nu_poly("7*(189 + 420*nu + 320*nu^2 + 100*nu^3 + 11*nu^4)", nu) * &beta
            + nu_poly("-196*(14 + 14*nu + 3*nu^2)", nu) * pw(&beta, 2)
            + qi(1372) * pw(&beta, 3);
        out.push(spot("F0 cubic in beta", &pt, lhs, rhs));

        // F2 quadratic in beta.
        let f2 = qi(-4) * c1 * c1 + c1 + c2 - qi(2) * (c3 + &one) * c4;
        let lhs = pw(nu, 2) * f(1) * pw(&f(2), 2) * f(3) * f(4) * f(5) * f2;
        let rhs = nu_poly("-6*nu^2*(2 + nu)^2*(60 + 107*nu + 59*nu^2 + 13*nu^3 + nu^4)", nu)
            + nu_poly("7*nu*(1080 + 2606*nu + 2263*nu^2 + 907*nu^3 + 170*nu^4 + 12*nu^5)", nu) * &beta
            + nu_poly("-98*(120 + 214*nu + 120*nu^2 + 29*nu^3 + 3*nu^4)", nu) * pw(&beta, 2);
        out.push(spot("F2 quadratic in beta", &pt, lhs, rhs));

        // F3 / C4 quadratic in beta.
        let f3_over_c4 = qi(4) * c3 * c3 + qi(2) * c3 + &one;
        let lhs = pw(&f(2), 2) * pw(&f(4), 2) * f3_over_c4;
        let m = nu_poly("8 + 6*nu + nu^2", nu);
        let rhs = qi(3) * pw(&m, 2) - qi(42) * &m * &beta + qi(196) * pw(&beta, 2);
        out.push(spot("F3/C4 quadratic in beta", &pt, lhs, rhs));
    }

    // Integer-frequency case: truncated sum I4(beta, e) and its e-derivative.
    let vars = ["beta", "e"];
    let i4 = parse_poly(
        "(7*beta/3 - 1)*e^2/16 + (7*beta/8 - 1)*(e/4)*(7*beta/3 - 1)^2 + (7*beta/15 - 1)*((7*beta/8 - 1)*(7*beta/3 - 1) - e/4)^2",
        &vars,
    )
    .expect("static expression");
    let de = {
        let e_idx = 1;
        let mut acc = PolyQ::zero(&vars);
        for (exps, c) in i4.terms() {
            if exps[e_idx] > 0 {
                let mut mono = PolyQ::constant(&vars, c * qi(exps[e_idx] as i64));
                mono = mono.mul(&PolyQ::var(&vars, 0).pow(exps[0])).mul(&PolyQ::var(&vars, 1).pow(exps[e_idx] - 1));
                acc = acc.add(&mono);
            }
        }
        acc
    };
    let hat = parse_poly("120 - 217*beta - 294*beta^2 + 343*beta^3 - (120 - 168*beta)*e", &vars).expect("static expression");
    let at_zero = parse_poly("(7*beta - 15)*(7*beta - 8)^2*(7*beta - 3)^2", &vars).expect("static expression");
    for (b, _) in points.iter().take(3) {
        let beta = b + q(3, 7);
        let e = q(1, 3);
        let pt = [&beta, &e];
        out.push(spot("480 dI4/de closed form", &pt, de.scale(&qi(480)).eval(&[beta.clone(), e.clone()]), hat.eval(&[beta.clone(), e.clone()])));
        out.push(spot("8640 I4(beta, 0) factorisation", &pt, i4.scale(&qi(8640)).eval(&[beta.clone(), Q::zero()]), at_zero.eval(&[beta.clone(), Q::zero()])));
    }
    Ok(out)
}

/// Sign of a ledger polynomial sampled on a grid (diagnostic helper).
pub fn min_on_grid(p: &PolyQ, dom: &IntervalBox, n: usize) -> Q {
    let mut best: Option<Q> = None;
    for i in 0..=n {
        for j in 1..n {
            let x0 = &dom.lo[0] + (&dom.hi[0] - &dom.lo[0]) * q(i as i64, n as i64);
            let x1 = &dom.lo[1] + (&dom.hi[1] - &dom.lo[1]) * q(j as i64, n as i64);
            let v = p.eval(&[x0, x1]);
            if best.as_ref().is_none_or(|b| v < *b) {
                best = Some(v);
            }
        }
    }
    best.unwrap_or_else(Q::zero)
}

