//! Lower bound on the number of positive eigenvalues of the truncated Fourier
//! matrix of the Hill operator, via a congruence to a block-diagonal matrix.
//!
//! With `s = (√(1-e²) - 1)/e` and `λ_n = 1 - √(1-e²)((n + √(1+7β))² - 1)/(7β)`
//! the matrix `A_N` has diagonal `λ_1, λ_0, …, λ_{-N}` and off-diagonal entries
//! `s^{|i-j|}`.  For `𝔫 = ⌊2√(1+7β)⌋` the comparison matrix `C ≤ A_{𝔫+1}` is
//! congruent to `H = diag(E, K, Ê)`.
//!
//! Exact computations use the rational parametrisation `e = 2t/(1+t²)`
//! (so `√(1-e²) = (1-t²)/(1+t²)` and `s = -t`) and `β = (q²-1)/7` (so
//! `√(1+7β) = q`).

use num::{One, Signed, ToPrimitive, Zero};

use super::linalg::{self, block_diag, congruence, identity, inverse, mat_mul, set_block, transpose, zeros, Inertia, Mat, Scalar};
use super::poly::{q, qi, q_to_f64, Q};
use super::{Certificate, Status};
use crate::error::{Error, Result};

/// Smallest `β` covered by the block construction (`𝔫 ≥ 3`).
pub const BETA_MIN: f64 = 5.0 / 28.0;

/// All matrices of the construction.
#[derive(Debug, Clone)]
pub struct Blocks<T> {
    /// `𝔫 = ⌊2√(1+7β)⌋`.
    pub n_frak: usize,
    /// `s = (√(1-e²) - 1)/e`.
    pub s: T,
    /// Diagonal entries `λ_1, λ_0, …, λ_{-𝔫-1}` of `A_{𝔫+1}`.
    pub lambdas: Vec<T>,
    /// Truncated matrix `A_{𝔫+1}` (size `𝔫+3`).
    pub a: Mat<T>,
    /// Comparison matrix `C` (size `𝔫+3`).
    pub c: Mat<T>,
    /// Upper 2×2 block `E`.
    pub e: Mat<T>,
    /// Lower 2×2 block `Ê`.
    pub e_hat: Mat<T>,
    /// Coupling `F` (2 × (𝔫-1)).
    pub f: Mat<T>,
    /// Coupling `F̂` (2 × (𝔫-1)).
    pub f_hat: Mat<T>,
    /// Toeplitz middle block `G`.
    pub g: Mat<T>,
    /// Schur complement `K = G - FᵀE⁻¹F - F̂ᵀÊ⁻¹F̂`.
    pub k: Mat<T>,
    /// `H = diag(E, K, Ê)`.
    pub h: Mat<T>,
    /// First congruence `P`.
    pub p: Mat<T>,
    /// Second congruence `Q`.
    pub q: Mat<T>,
}

fn powers<T: Scalar>(s: &T, n: usize) -> Vec<T> {
    let mut p = vec![T::one()];
    for k in 1..=n {
        let next = p[k - 1].clone() * s.clone();
        p.push(next);
    }
    p
}

fn toeplitz<T: Scalar>(diag: &[T], sp: &[T]) -> Mat<T> {
    let n = diag.len();
    (0..n).map(|i| (0..n).map(|j| if i == j { diag[i].clone() } else { sp[i.abs_diff(j)].clone() }).collect()).collect()
}

fn assemble<T: Scalar>(n_frak: usize, s: T, lambda: impl Fn(i64) -> T) -> Result<Blocks<T>> {
    if n_frak < 3 {
        return Err(Error::Domain(format!("block construction needs floor(2 sqrt(1+7 beta)) >= 3, got {n_frak}")));
    }
    let size = n_frak + 3;
    let sp = powers(&s, size);
    let two = T::one() + T::one();
    let (l1, l0, lm1) = (lambda(1), lambda(0), lambda(-1));
    let lambdas: Vec<T> = (0..size).map(|i| lambda(1 - i as i64)).collect();
    let a = toeplitz(&lambdas, &sp);
    let mut cdiag = vec![l1.clone(), l0.clone()];
    cdiag.extend(std::iter::repeat(lm1.clone()).take(n_frak - 1));
    cdiag.push(l0.clone());
    cdiag.push(l1.clone());
    let c = toeplitz(&cdiag, &sp);

    let s2 = sp[2].clone();
    let top = l1.clone() + (l0.clone() - two.clone()) * s2.clone();
    let mid = l0.clone() + (lm1.clone() - two) * s2;
    let off = s.clone() * (T::one() - l0);
    let e = vec![vec![top.clone(), off.clone()], vec![off.clone(), mid.clone()]];
    let e_hat = vec![vec![mid, off.clone()], vec![off, top]];
    let m = n_frak - 1;
    let coupling = s.clone() * (T::one() - lm1.clone());
    let mut f = zeros(2, m);
    f[1][0] = coupling.clone();
    let mut f_hat = zeros(2, m);
    f_hat[0][m - 1] = coupling;
    let g = toeplitz(&vec![lm1; m], &sp);

    let e_inv = inverse(&e).ok_or_else(|| Error::Domain("E is singular".into()))?;
    let e_hat_inv = inverse(&e_hat).ok_or_else(|| Error::Domain("E-hat is singular".into()))?;
    let k = linalg::sub(&linalg::sub(&g, &congruence(&e_inv, &f)), &congruence(&e_hat_inv, &f_hat));
    let h = block_diag(&[&e, &k, &e_hat]);

    let p1 = vec![
        vec![T::one(), -s.clone(), T::zero()],
        vec![T::zero(), T::one(), -s.clone()],
        vec![T::zero(), T::zero(), T::one()],
    ];
    let p = block_diag(&[&p1, &identity(n_frak - 3), &transpose(&p1)]);
    let mut qm = identity::<T>(size);
    let ef = linalg::scale(&mat_mul(&e_inv, &f), &(-T::one()));
    let ef_hat = linalg::scale(&mat_mul(&e_hat_inv, &f_hat), &(-T::one()));
    set_block(&mut qm, 0, 2, &ef);
    set_block(&mut qm, n_frak + 1, 2, &ef_hat);
    Ok(Blocks { n_frak, s, lambdas, a, c, e, e_hat, f, f_hat, g, k, h, p, q: qm })
}

impl<T: Scalar> Blocks<T> {
    /// `D = P C Pᵀ`.
    pub fn d(&self) -> Mat<T> {
        mat_mul(&self.p, &mat_mul(&self.c, &transpose(&self.p)))
    }

    /// The block form `[[E, F, 0], [Fᵀ, G, F̂ᵀ], [0, F̂, Ê]]` expected for `D`.
    pub fn d_expected(&self) -> Mat<T> {
        let n = self.n_frak + 3;
        let mut d = zeros(n, n);
        set_block(&mut d, 0, 0, &self.e);
        set_block(&mut d, 0, 2, &self.f);
        set_block(&mut d, 2, 0, &transpose(&self.f));
        set_block(&mut d, 2, 2, &self.g);
        set_block(&mut d, 2, self.n_frak + 1, &transpose(&self.f_hat));
        set_block(&mut d, self.n_frak + 1, 2, &self.f_hat);
        set_block(&mut d, self.n_frak + 1, self.n_frak + 1, &self.e_hat);
        d
    }

    /// Largest entry of `|P C Pᵀ - D|` (zero in exact arithmetic).
    pub fn first_congruence_residual(&self) -> T {
        linalg::max_abs(&linalg::sub(&self.d(), &self.d_expected()))
    }

    /// Largest entry of `|Qᵀ D Q - H|` (zero in exact arithmetic).
    pub fn second_congruence_residual(&self) -> T {
        linalg::max_abs(&linalg::sub(&congruence(&self.d_expected(), &self.q), &self.h))
    }

    /// Diagonal of `A_{𝔫+1} - C` (the off-diagonals agree); all entries should be `≥ 0`.
    pub fn comparison_gap(&self) -> Vec<T> {
        (0..self.a.len()).map(|i| self.a[i][i].clone() - self.c[i][i].clone()).collect()
    }
}

/// Floating-point blocks at `(β, e)`.
pub fn build_blocks(beta: f64, ecc: f64) -> Result<Blocks<f64>> {
    if !(ecc > 0.0 && ecc < 1.0) {
        return Err(Error::Domain(format!("eccentricity {ecc} not in (0, 1)")));
    }
    if !(beta >= BETA_MIN && beta.is_finite()) {
        return Err(Error::Domain(format!("beta {beta} below 5/28")));
    }
    let r = (1.0 - ecc * ecc).sqrt();
    let s = -ecc / (1.0 + r);
    let c = (1.0 + 7.0 * beta).sqrt();
    let n_frak = (2.0 * c).floor() as usize;
    assemble(n_frak, s, |n| {
        let x = n as f64 + c;
        1.0 - r * (x * x - 1.0) / (7.0 * beta)
    })
}

/// Exact blocks at `e = 2t/(1+t²)`, `β = (q²-1)/7`.
pub fn build_blocks_exact(t: &Q, qq: &Q) -> Result<Blocks<Q>> {
    if !(t.is_positive() && *t < Q::one()) {
        return Err(Error::Domain(format!("t = {t} not in (0, 1)")));
    }
    if *qq < q(3, 2) {
        return Err(Error::Domain(format!("q = {qq} below 3/2 (beta below 5/28)")));
    }
    let one = Q::one();
    let t2 = t * t;
    let r = (&one - &t2) / (&one + &t2);
    let beta = (qq * qq - &one) / qi(7);
    let n_frak = (qq * qi(2)).floor().to_integer().to_usize().ok_or_else(|| Error::Domain("q too large".into()))?;
    let seven_beta = &beta * qi(7);
    assemble(n_frak, -t.clone(), |n| {
        let x = Q::from_integer(n.into()) + qq;
        &one - &r * (&x * &x - &one) / &seven_beta
    })
}

/// Eccentricity and `β` of the rational parametrisation.
pub fn rational_parameters(t: &Q, qq: &Q) -> (Q, Q) {
    let one = Q::one();
    ((t * qi(2)) / (&one + t * t), (qq * qq - one) / qi(7))
}

/// Closed form `det E = -s²(1-e²)(1+7β)(3+7β)/(49β²)`.
pub fn det_e_closed_form(beta: f64, ecc: f64) -> f64 {
    let r = (1.0 - ecc * ecc).sqrt();
    let s = -ecc / (1.0 + r);
    -s * s * (1.0 - ecc * ecc) * (1.0 + 7.0 * beta) * (3.0 + 7.0 * beta) / (49.0 * beta * beta)
}

/// Diagonal correction `κ_1 = √(1-e²)(1+2√(1+7β))(√(1+7β)-2)²/(7β(3+7β))`.
pub fn kappa1(beta: f64, ecc: f64) -> f64 {
    let r = (1.0 - ecc * ecc).sqrt();
    let c = (1.0 + 7.0 * beta).sqrt();
    r * (1.0 + 2.0 * c) * (c - 2.0).powi(2) / (7.0 * beta * (3.0 + 7.0 * beta))
}

/// Smallest diagonal entry of `K`: `κ = 2(3+7βs²)/((3+7β)(1+s²))`.
pub fn kappa(beta: f64, ecc: f64) -> f64 {
    let r = (1.0 - ecc * ecc).sqrt();
    let s = -ecc / (1.0 + r);
    2.0 * (3.0 + 7.0 * beta * s * s) / ((3.0 + 7.0 * beta) * (1.0 + s * s))
}

/// Upper end `(6/e + 3)/7` of the range where `K` is positive definite.
pub fn beta_max(ecc: f64) -> f64 {
    (6.0 / ecc + 3.0) / 7.0
}

fn claim(beta: &str, ecc: &str, needed: usize) -> String {
    format!("A_(n+1) has at least {needed} positive eigenvalues at beta = {beta}, e = {ecc}")
}

/// Verifies `m⁺(A_{𝔫+1}) ≥ 𝔫 + 1` in floating point with a backward-error
/// bound, and validates the chain `m⁺(A_{𝔫+1}) ≥ m⁺(C) = m⁺(H)`.
pub fn check_morse_bound(beta0: f64, ecc: f64) -> Result<Certificate> {
    if !(ecc > 0.0 && ecc < 1.0) {
        return Err(Error::Domain(format!("eccentricity {ecc} not in (0, 1)")));
    }
    if !(BETA_MIN..=beta_max(ecc)).contains(&beta0) {
        return Err(Error::Domain(format!("beta {beta0} outside [5/28, (6/e+3)/7]")));
    }
    let b = build_blocks(beta0, ecc)?;
    let needed = b.n_frak + 1;
    let claim = claim(&beta0.to_string(), &ecc.to_string(), needed);
    let (inertia, vals, tol) = linalg::inertia_f64(&b.a);
    let certain_positive = vals.iter().filter(|v| **v > tol).count();
    let certain_nonpositive = vals.iter().filter(|v| **v < -tol).count();
    let scale_h = linalg::max_abs(&b.h).max(1.0);
    let chain_ok = b.comparison_gap().iter().all(|g| *g >= -tol)
        && b.first_congruence_residual() <= 1e-12 * scale_h
        && b.second_congruence_residual() <= 1e-10 * scale_h
        && matches!(linalg::inertia_f64(&b.h).0, Some(Inertia { positive, .. }) if positive >= needed);
    let status = if certain_positive >= needed {
        if chain_ok {
            Status::Proved
        } else {
            Status::Inconclusive { depth: 0, region: "eigenvalue count holds but the congruence chain failed".into() }
        }
    } else if inertia.is_some() || vals.len() - certain_nonpositive < needed {
        Status::Refuted { witness: vec![beta0.to_string(), ecc.to_string()], value: certain_positive.to_string() }
    } else {
        Status::Inconclusive { depth: 0, region: format!("eigenvalue within {tol:e} of zero") }
    };
    Ok(Certificate { claim, status, boxes_used: 1 })
}

/// Exact version of [`check_morse_bound`] at `e = 2t/(1+t²)`, `β = (q²-1)/7`:
/// inertia from the characteristic polynomial and exact congruence identities.
pub fn check_morse_bound_exact(t: &Q, qq: &Q) -> Result<Certificate> {
    let (ecc, beta) = rational_parameters(t, qq);
    let ecc_f = q_to_f64(&ecc);
    if q_to_f64(&beta) > beta_max(ecc_f) {
        return Err(Error::Domain(format!("beta {beta} above (6/e+3)/7")));
    }
    let b = build_blocks_exact(t, qq)?;
    let needed = b.n_frak + 1;
    let claim = claim(&beta.to_string(), &ecc.to_string(), needed);
    let ia = linalg::inertia_exact(&b.a);
    let ih = linalg::inertia_exact(&b.h);
    let chain_ok = b.comparison_gap().iter().all(|g| !g.is_negative())
        && b.first_congruence_residual().is_zero()
        && b.second_congruence_residual().is_zero()
        && ih == linalg::inertia_exact(&b.c)
        && ih.positive >= needed;
    let status = if ia.positive >= needed {
        if chain_ok {
            Status::Proved
        } else {
            Status::Inconclusive { depth: 0, region: "eigenvalue count holds but the congruence chain failed".into() }
        }
    } else {
        Status::Refuted { witness: vec![beta.to_string(), ecc.to_string()], value: ia.positive.to_string() }
    };
    Ok(Certificate { claim, status, boxes_used: 1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        let b = build_blocks(0.5, 0.3).unwrap();
        let n = b.n_frak;
        assert_eq!(n, (2.0 * 4.5f64.sqrt()).floor() as usize);
        assert_eq!(b.a.len(), n + 3);
        assert_eq!(b.g.len(), n - 1);
        assert_eq!((b.f.len(), b.f[0].len()), (2, n - 1));
        assert!(build_blocks(0.1, 0.3).is_err());
        assert!(build_blocks(0.5, 1.0).is_err());
    }
}
