//! Small dense matrices generic over `f64` and exact rationals.

use num::{Num, Signed};
use std::fmt::Debug;

/// Scalar field usable by the generic matrix routines.
pub trait Scalar: Num + Signed + Clone + PartialOrd + Debug {}

impl<T: Num + Signed + Clone + PartialOrd + Debug> Scalar for T {}

/// Row-major dense matrix.
pub type Mat<T> = Vec<Vec<T>>;

/// `n × m` zero matrix.
pub fn zeros<T: Scalar>(n: usize, m: usize) -> Mat<T> {
    vec![vec![T::zero(); m]; n]
}

/// Identity matrix.
pub fn identity<T: Scalar>(n: usize) -> Mat<T> {
    let mut a = zeros(n, n);
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = T::one();
    }
    a
}

/// Number of rows and columns.
pub fn shape<T>(a: &Mat<T>) -> (usize, usize) {
    (a.len(), a.first().map_or(0, |r| r.len()))
}

/// Matrix product.
pub fn mat_mul<T: Scalar>(a: &Mat<T>, b: &Mat<T>) -> Mat<T> {
    let (n, k) = shape(a);
    let (k2, m) = shape(b);
    assert_eq!(k, k2, "inner dimensions differ");
    let mut c: Mat<T> = zeros(n, m);
    for i in 0..n {
        for l in 0..k {
            if a[i][l].is_zero() {
                continue;
            }
            for j in 0..m {
                c[i][j] = c[i][j].clone() + a[i][l].clone() * b[l][j].clone();
            }
        }
    }
    c
}

/// Transpose.
pub fn transpose<T: Scalar>(a: &Mat<T>) -> Mat<T> {
    let (n, m) = shape(a);
    (0..m).map(|j| (0..n).map(|i| a[i][j].clone()).collect()).collect()
}

/// Entrywise `a + b`.
pub fn add<T: Scalar>(a: &Mat<T>, b: &Mat<T>) -> Mat<T> {
    a.iter().zip(b).map(|(r, s)| r.iter().zip(s).map(|(x, y)| x.clone() + y.clone()).collect()).collect()
}

/// Entrywise `a - b`.
pub fn sub<T: Scalar>(a: &Mat<T>, b: &Mat<T>) -> Mat<T> {
    a.iter().zip(b).map(|(r, s)| r.iter().zip(s).map(|(x, y)| x.clone() - y.clone()).collect()).collect()
}

/// Scalar multiple.
pub fn scale<T: Scalar>(a: &Mat<T>, c: &T) -> Mat<T> {
    a.iter().map(|r| r.iter().map(|x| x.clone() * c.clone()).collect()).collect()
}

/// `bᵀ a b`.
pub fn congruence<T: Scalar>(a: &Mat<T>, b: &Mat<T>) -> Mat<T> {
    mat_mul(&transpose(b), &mat_mul(a, b))
}

/// Block-diagonal matrix.
pub fn block_diag<T: Scalar>(blocks: &[&Mat<T>]) -> Mat<T> {
    let n: usize = blocks.iter().map(|b| shape(b).0).sum();
    let mut out = zeros(n, n);
    let mut off = 0;
    for b in blocks {
        let (r, c) = shape(b);
        for i in 0..r {
            for j in 0..c {
                out[off + i][off + j] = b[i][j].clone();
            }
        }
        off += r;
    }
    out
}

/// Copies `b` into `a` with its top-left corner at `(i0, j0)`.
pub fn set_block<T: Scalar>(a: &mut Mat<T>, i0: usize, j0: usize, b: &Mat<T>) {
    for (i, row) in b.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            a[i0 + i][j0 + j] = x.clone();
        }
    }
}

/// Trace.
pub fn trace<T: Scalar>(a: &Mat<T>) -> T {
    (0..a.len()).fold(T::zero(), |acc, i| acc + a[i][i].clone())
}

/// Largest absolute entry.
pub fn max_abs<T: Scalar>(a: &Mat<T>) -> T {
    let mut m = T::zero();
    for r in a {
        for x in r {
            let v = x.abs();
            if v > m {
                m = v;
            }
        }
    }
    m
}

/// Inverse by Gauss–Jordan elimination with partial pivoting; `None` when singular.
pub fn inverse<T: Scalar>(a: &Mat<T>) -> Option<Mat<T>> {
    let n = a.len();
    let mut m = a.clone();
    let mut inv = identity::<T>(n);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap_or(std::cmp::Ordering::Equal))?;
        if m[piv][col].is_zero() {
            return None;
        }
        m.swap(col, piv);
        inv.swap(col, piv);
        let p = m[col][col].clone();
        for j in 0..n {
            m[col][j] = m[col][j].clone() / p.clone();
            inv[col][j] = inv[col][j].clone() / p.clone();
        }
        for i in 0..n {
            if i == col || m[i][col].is_zero() {
                continue;
            }
            let f = m[i][col].clone();
            for j in 0..n {
                m[i][j] = m[i][j].clone() - f.clone() * m[col][j].clone();
                inv[i][j] = inv[i][j].clone() - f.clone() * inv[col][j].clone();
            }
        }
    }
    Some(inv)
}

/// Determinant by elimination.
pub fn det<T: Scalar>(a: &Mat<T>) -> T {
    let n = a.len();
    let mut m = a.clone();
    let mut d = T::one();
    for col in 0..n {
        let piv = match (col..n).find(|&i| !m[i][col].is_zero()) {
            Some(p) => p,
            None => return T::zero(),
        };
        if piv != col {
            m.swap(col, piv);
            d = -d;
        }
        let p = m[col][col].clone();
        d = d * p.clone();
        for i in (col + 1)..n {
            let f = m[i][col].clone() / p.clone();
            if f.is_zero() {
                continue;
            }
            for j in col..n {
                m[i][j] = m[i][j].clone() - f.clone() * m[col][j].clone();
            }
        }
    }
    d
}

/// Coefficients `c_0, …, c_n` of the characteristic polynomial
/// `det(x I - A) = Σ c_k x^k` (Faddeev–LeVerrier recursion).
pub fn char_poly<T: Scalar>(a: &Mat<T>) -> Vec<T> {
    let n = a.len();
    let mut c = vec![T::zero(); n + 1];
    c[n] = T::one();
    let mut m = zeros::<T>(n, n);
    let mut k_t = T::zero();
    for k in 1..=n {
        k_t = k_t + T::one();
        // M_k = A M_{k-1} + c_{n-k+1} I
        let mut next = mat_mul(a, &m);
        for (i, row) in next.iter_mut().enumerate() {
            row[i] = row[i].clone() + c[n - k + 1].clone();
        }
        m = next;
        let am = mat_mul(a, &m);
        c[n - k] = -(trace(&am) / k_t.clone());
    }
    c
}

/// Numbers of positive, negative and zero eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Inertia {
    /// Positive eigenvalues.
    pub positive: usize,
    /// Negative eigenvalues.
    pub negative: usize,
    /// Zero eigenvalues.
    pub zero: usize,
}

fn sign_changes<T: Scalar>(c: &[T]) -> usize {
    let mut last: Option<bool> = None;
    let mut n = 0;
    for x in c {
        if x.is_zero() {
            continue;
        }
        let pos = x.is_positive();
        if let Some(l) = last {
            if l != pos {
                n += 1;
            }
        }
        last = Some(pos);
    }
    n
}

/// Exact inertia of a symmetric matrix from its characteristic polynomial.
/// All roots are real, so Descartes' rule of signs counts them exactly.
pub fn inertia_exact<T: Scalar>(a: &Mat<T>) -> Inertia {
    let c = char_poly(a);
    let zero = c.iter().position(|x| !x.is_zero()).unwrap_or(c.len() - 1);
    let positive = sign_changes(&c);
    let reflected: Vec<T> = c.iter().enumerate().map(|(k, x)| if k % 2 == 1 { -x.clone() } else { x.clone() }).collect();
    let negative = sign_changes(&reflected);
    Inertia { positive, negative, zero }
}

/// Converts to an `nalgebra` matrix of `f64`.
pub fn to_dmatrix(a: &Mat<f64>) -> nalgebra::DMatrix<f64> {
    let (n, m) = shape(a);
    nalgebra::DMatrix::from_fn(n, m, |i, j| a[i][j])
}

/// Floating inertia with a backward-error bound: eigenvalues of magnitude
/// below `tol` are reported as undecided (`None`).
pub fn inertia_f64(a: &Mat<f64>) -> (Option<Inertia>, Vec<f64>, f64) {
    let n = a.len();
    let m = to_dmatrix(a);
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    let norm = m.norm();
    // Backward stability of the symmetric eigensolver plus rounding of the entries.
    let tol = 64.0 * (n.max(1) as f64) * f64::EPSILON * norm.max(f64::MIN_POSITIVE);
    let vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    if vals.iter().any(|v| v.abs() <= tol) {
        return (None, vals, tol);
    }
    let positive = vals.iter().filter(|v| **v > 0.0).count();
    (Some(Inertia { positive, negative: n - positive, zero: 0 }), vals, tol)
}

#[cfg(test)]
mod tests {
    use super::super::poly::{q, qi};
    use super::*;
    use num::BigRational;

    #[test]
    fn inverse_and_det_exact() {
        let a: Mat<BigRational> = vec![vec![qi(2), qi(1)], vec![qi(1), qi(3)]];
        let inv = inverse(&a).unwrap();
        assert_eq!(mat_mul(&a, &inv), identity(2));
        assert_eq!(det(&a), qi(5));
        assert!(inverse(&vec![vec![qi(1), qi(2)], vec![qi(2), qi(4)]]).is_none());
    }

    #[test]
    fn char_poly_and_inertia() {
        // diag(2, -1, 0) conjugated by a unimodular matrix keeps its inertia.
        let d: Mat<BigRational> = vec![vec![qi(2), qi(0), qi(0)], vec![qi(0), qi(-1), qi(0)], vec![qi(0), qi(0), qi(0)]];
        let p: Mat<BigRational> = vec![vec![qi(1), q(1, 2), qi(0)], vec![qi(0), qi(1), qi(3)], vec![qi(0), qi(0), qi(1)]];
        let a = congruence(&d, &p);
        assert_eq!(inertia_exact(&a), Inertia { positive: 1, negative: 1, zero: 1 });
        let c = char_poly(&d);
        assert_eq!(c, vec![qi(0), qi(-2), qi(-1), qi(1)]);
        let (f, _, _) = inertia_f64(&vec![vec![2.0, 0.1], vec![0.1, -1.0]]);
        assert_eq!(f, Some(Inertia { positive: 1, negative: 1, zero: 0 }));
        let (f, _, _) = inertia_f64(&vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
        assert_eq!(f, None);
    }
}
