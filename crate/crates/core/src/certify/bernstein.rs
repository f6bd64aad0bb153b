//! Exact Bernstein-coefficient positivity certification on boxes.
//!
//! A polynomial of degree `n_i` in each variable `x_i` is written in the
//! tensor Bernstein basis of a box.  Bernstein polynomials are non-negative on
//! the box and strictly positive in its interior, so sign information on the
//! coefficients transfers to the polynomial.  Boxes are bisected with exact de
//! Casteljau splits until every leaf is certified, a negative value is found,
//! or the depth budget is exhausted.
//!
//! Faces of the domain can be declared open (excluded).  A leaf is accepted
//! when all its coefficients are non-negative and, for every admissible
//! combination of "interior / lower face / upper face" per variable (open
//! faces of the domain omitted), some compatible coefficient is strictly
//! positive; this implies strict positivity on the leaf minus the open faces.
//! Zeros at a vertex lying on an open face are resolved by one homogeneous
//! blow-up of the vertex (two-variable problems).

use num::{BigInt, Integer, One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::poly::{q, PolyQ, Q};
use super::{Certificate, Status};

/// A box with rational endpoints; faces can be open.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalBox {
    /// Lower endpoints.
    pub lo: Vec<Q>,
    /// Upper endpoints.
    pub hi: Vec<Q>,
    /// Whether the lower face is excluded.
    pub lo_open: Vec<bool>,
    /// Whether the upper face is excluded.
    pub hi_open: Vec<bool>,
}

impl IntervalBox {
    /// Closed box.
    pub fn closed(lo: Vec<Q>, hi: Vec<Q>) -> Self {
        let d = lo.len();
        assert_eq!(d, hi.len());
        assert!(lo.iter().zip(&hi).all(|(a, b)| a <= b), "empty box");
        Self { lo, hi, lo_open: vec![false; d], hi_open: vec![false; d] }
    }

    /// Marks the lower/upper face of variable `i` as open.
    pub fn with_open(mut self, i: usize, lo_open: bool, hi_open: bool) -> Self {
        self.lo_open[i] = lo_open;
        self.hi_open[i] = hi_open;
        self
    }

    /// Dimension.
    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Human-readable description with open/closed brackets.
    pub fn describe(&self, names: &[String]) -> String {
        (0..self.dim())
            .map(|i| {
                format!(
                    "{} in {}{}, {}{}",
                    names.get(i).map(|s| s.as_str()).unwrap_or("?"),
                    if self.lo_open[i] { "(" } else { "[" },
                    self.lo[i],
                    self.hi[i],
                    if self.hi_open[i] { ")" } else { "]" }
                )
            })
            .collect::<Vec<_>>()
            .join(" x ")
    }

    /// Splits along dimension `i` at the midpoint; the new internal faces are closed.
    pub fn split(&self, i: usize) -> (Self, Self) {
        let mid = (&self.lo[i] + &self.hi[i]) / q(2, 1);
        let mut a = self.clone();
        let mut b = self.clone();
        a.hi[i] = mid.clone();
        a.hi_open[i] = false;
        b.lo[i] = mid;
        b.lo_open[i] = false;
        (a, b)
    }
}

/// Dense tensor of Bernstein coefficients, stored as integers times a common
/// positive scale so that subdivision needs integer additions only.
#[derive(Debug, Clone)]
pub struct Bernstein {
    /// Degree per variable.
    pub deg: Vec<usize>,
    /// Scaled coefficients in row-major order (last variable fastest).
    coef: Vec<BigInt>,
    /// Positive factor: true coefficient = `coef * scale`.
    scale: Q,
}

fn binomials(n: usize) -> Vec<BigInt> {
    let mut row = vec![BigInt::one()];
    for k in 1..=n {
        let next = &row[k - 1] * BigInt::from(n - k + 1) / BigInt::from(k);
        row.push(next);
    }
    row
}

impl Bernstein {
    fn strides(deg: &[usize]) -> Vec<usize> {
        let mut s = vec![1; deg.len()];
        for i in (0..deg.len().saturating_sub(1)).rev() {
            s[i] = s[i + 1] * (deg[i + 1] + 1);
        }
        s
    }

    /// Bernstein coefficients of `p` on `b` (degrees = per-variable degrees of `p`).
    pub fn from_poly(p: &PolyQ, b: &IntervalBox) -> Self {
        let d = b.dim();
        let deg: Vec<usize> = (0..d).map(|i| p.degree_in(i) as usize).collect();
        let names: Vec<&str> = p.vars().iter().map(|s| s.as_str()).collect();
        // x_i = lo_i + (hi_i - lo_i) t_i
        let subs: Vec<PolyQ> = (0..d)
            .map(|i| PolyQ::constant(&names, b.lo[i].clone()).add(&PolyQ::var(&names, i).scale(&(&b.hi[i] - &b.lo[i]))))
            .collect();
        let unit = p.substitute(&subs);
        let strides = Self::strides(&deg);
        let size: usize = deg.iter().map(|n| n + 1).product();
        let mut coef = vec![Q::zero(); size];
        for (e, c) in unit.terms() {
            let idx: usize = e.iter().zip(&strides).map(|(k, s)| *k as usize * s).sum();
            coef[idx] = c.clone();
        }
        // Monomial -> Bernstein along each axis: b_k = sum_{j<=k} C(k,j)/C(n,j) a_j.
        for axis in 0..d {
            let n = deg[axis];
            if n == 0 {
                continue;
            }
            let cn = binomials(n);
            let ck: Vec<Vec<BigInt>> = (0..=n).map(binomials).collect();
            let stride = strides[axis];
            for base in 0..size {
                if (base / stride) % (n + 1) != 0 {
                    continue;
                }
                let line: Vec<Q> = (0..=n).map(|k| coef[base + k * stride].clone()).collect();
                for k in 0..=n {
                    let mut acc = Q::zero();
                    for j in 0..=k {
                        if !line[j].is_zero() {
                            acc += &line[j] * Q::new(ck[k][j].clone(), cn[j].clone());
                        }
                    }
                    coef[base + k * stride] = acc;
                }
            }
        }
        let lcm = coef.iter().fold(BigInt::one(), |l, c| l.lcm(c.denom()));
        let ints: Vec<BigInt> = coef.iter().map(|c| (c * Q::from(lcm.clone())).to_integer()).collect();
        let mut out = Self { deg, coef: ints, scale: Q::new(BigInt::one(), lcm) };
        out.normalise();
        out
    }

    /// Divides out the common content of the integer coefficients.
    fn normalise(&mut self) {
        let g = self.coef.iter().fold(BigInt::zero(), |g, c| g.gcd(c));
        if !g.is_zero() && !g.is_one() {
            for c in &mut self.coef {
                *c /= &g;
            }
            self.scale = &self.scale * Q::from(g);
        }
    }

    /// The Bernstein coefficients.
    pub fn coefficients(&self) -> Vec<Q> {
        self.coef.iter().map(|c| Q::from(c.clone()) * &self.scale).collect()
    }

    fn index_to_multi(&self, mut idx: usize) -> Vec<usize> {
        let mut m = vec![0; self.deg.len()];
        for i in (0..self.deg.len()).rev() {
            m[i] = idx % (self.deg[i] + 1);
            idx /= self.deg[i] + 1;
        }
        m
    }

    /// De Casteljau bisection along `axis`.
    pub fn split(&self, axis: usize) -> (Self, Self) {
        let n = self.deg[axis];
        let strides = Self::strides(&self.deg);
        let stride = strides[axis];
        let mut left = self.coef.clone();
        let mut right = self.coef.clone();
        let mut scale = self.scale.clone();
        if n > 0 {
            // Unhalved averages: level `j` carries a factor 2^j, so shifting by
            // n - j puts every entry on the common factor 2^n.
            for base in 0..self.coef.len() {
                if (base / stride) % (n + 1) != 0 {
                    continue;
                }
                let mut work: Vec<BigInt> = (0..=n).map(|k| self.coef[base + k * stride].clone()).collect();
                left[base] = work[0].clone() << n;
                right[base + n * stride] = work[n].clone() << n;
                for level in 1..=n {
                    for k in 0..=(n - level) {
                        let next = &work[k] + &work[k + 1];
                        work[k] = next;
                    }
                    left[base + level * stride] = work[0].clone() << (n - level);
                    right[base + (n - level) * stride] = work[n - level].clone() << (n - level);
                }
            }
            scale /= Q::from(BigInt::one() << n);
        }
        let mut a = Self { deg: self.deg.clone(), coef: left, scale: scale.clone() };
        let mut b = Self { deg: self.deg.clone(), coef: right, scale };
        a.normalise();
        b.normalise();
        (a, b)
    }

    /// Per-axis bound on the distance between the control net and the
    /// polynomial: `⌊n/2⌋⌈n/2⌉/(2n) · max |Δ²b|` along each axis (scaled units).
    fn net_error(&self) -> Vec<Q> {
        let strides = Self::strides(&self.deg);
        (0..self.deg.len())
            .map(|axis| {
                let n = self.deg[axis];
                if n < 2 {
                    return Q::zero();
                }
                let stride = strides[axis];
                let mut worst = BigInt::zero();
                for (idx, c) in self.coef.iter().enumerate() {
                    if (idx / stride) % (n + 1) + 2 > n {
                        continue;
                    }
                    let d2 = (c - (&self.coef[idx + stride] << 1usize) + &self.coef[idx + 2 * stride]).abs();
                    if d2 > worst {
                        worst = d2;
                    }
                }
                Q::new(worst * BigInt::from((n / 2) * n.div_ceil(2)), BigInt::from(2 * n))
            })
            .collect()
    }

    /// Smallest and largest coefficients (an enclosure of the range on the box).
    pub fn range(&self) -> (Q, Q) {
        let lo = self.coef.iter().min().expect("non-empty tensor");
        let hi = self.coef.iter().max().expect("non-empty tensor");
        (Q::from(lo.clone()) * &self.scale, Q::from(hi.clone()) * &self.scale)
    }

    /// Strict positivity on the box minus its open faces (see module docs).
    pub fn certifies_positive(&self, b: &IntervalBox) -> bool {
        if self.coef.iter().any(|c| c.is_negative()) {
            return false;
        }
        if self.coef.iter().all(|c| c.is_positive()) {
            return true;
        }
        let d = self.deg.len();
        // Enumerate face patterns: 0 = interior, 1 = lower face, 2 = upper face.
        let mut pattern = vec![0usize; d];
        let positive: Vec<Vec<usize>> = self.coef.iter().enumerate().filter(|(_, c)| c.is_positive()).map(|(i, _)| self.index_to_multi(i)).collect();
        loop {
            let admissible = (0..d).all(|i| match pattern[i] {
                1 => !b.lo_open[i],
                2 => !b.hi_open[i] && (self.deg[i] > 0 || !b.lo_open[i]),
                _ => true,
            });
            if admissible {
                let ok = positive.iter().any(|m| {
                    (0..d).all(|i| match pattern[i] {
                        1 => m[i] == 0,
                        2 => m[i] == self.deg[i],
                        _ => true,
                    })
                });
                if !ok {
                    return false;
                }
            }
            // Next pattern.
            let mut i = 0;
            loop {
                if i == d {
                    return true;
                }
                pattern[i] += 1;
                if pattern[i] <= 2 {
                    break;
                }
                pattern[i] = 0;
                i += 1;
            }
        }
    }

    /// Coefficient at a vertex of the box (equal to the polynomial value there);
    /// `upper[i]` selects the upper endpoint in variable `i`.
    pub fn vertex(&self, upper: &[bool]) -> Q {
        let strides = Self::strides(&self.deg);
        let idx: usize = upper.iter().enumerate().map(|(i, u)| if *u { self.deg[i] * strides[i] } else { 0 }).sum();
        Q::from(self.coef[idx].clone()) * &self.scale
    }
}

/// Options for [`certify_positive`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertifyOptions {
    /// Maximum number of bisections of any one axis along a branch (each
    /// leaf edge is at least `2^-max_depth` of the domain edge).
    pub max_depth: usize,
    /// Allow one vertex blow-up per branch for zeros on open faces.
    pub blow_up: bool,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self { max_depth: 24, blow_up: true }
    }
}

/// Region currently being certified: a box in local coordinates and the map
/// from local coordinates to the original ones.
#[derive(Clone)]
struct Region {
    local: IntervalBox,
    poly: PolyQ,
    /// Original coordinates as polynomials of the local ones (`None` = identity).
    map: Option<Vec<PolyQ>>,
    blown: bool,
}

enum Outcome {
    Proved(usize),
    Refuted(Vec<Q>, Q, usize),
    Inconclusive(String, usize),
}

fn to_original(r: &Region, x: &[Q]) -> Vec<Q> {
    match &r.map {
        None => x.to_vec(),
        Some(m) => m.iter().map(|p| p.eval(x)).collect(),
    }
}

fn widths(b: &IntervalBox, reference: &[Q]) -> Vec<Q> {
    (0..b.dim())
        .map(|i| {
            let w = &b.hi[i] - &b.lo[i];
            if reference[i].is_zero() {
                w
            } else {
                w / &reference[i]
            }
        })
        .collect()
}

/// Searches for an exactly negative point near a negative vertex on an open face.
fn witness_near(r: &Region, b: &IntervalBox, upper: &[bool]) -> Option<(Vec<Q>, Q)> {
    let d = b.dim();
    let vertex: Vec<Q> = (0..d).map(|i| if upper[i] { b.hi[i].clone() } else { b.lo[i].clone() }).collect();
    let mut step = q(1, 2);
    for _ in 0..60 {
        let x: Vec<Q> = (0..d)
            .map(|i| {
                let open = if upper[i] { b.hi_open[i] } else { b.lo_open[i] };
                if open {
                    let w = &b.hi[i] - &b.lo[i];
                    if upper[i] {
                        &vertex[i] - &w * &step
                    } else {
                        &vertex[i] + &w * &step
                    }
                } else {
                    vertex[i].clone()
                }
            })
            .collect();
        let v = r.poly.eval(&x);
        if v.is_negative() {
            return Some((to_original(r, &x), v));
        }
        step /= q(2, 1);
    }
    None
}

fn all_vertices(d: usize) -> Vec<Vec<bool>> {
    (0..(1usize << d)).map(|m| (0..d).map(|i| m >> i & 1 == 1).collect()).collect()
}

fn on_open_face(b: &IntervalBox, upper: &[bool]) -> bool {
    (0..b.dim()).any(|i| if upper[i] { b.hi_open[i] } else { b.lo_open[i] })
}

/// Homogeneous blow-up of a vertex of a two-dimensional box.
fn blow_up(r: &Region, b: &IntervalBox, upper: &[bool]) -> [Region; 2] {
    let names: Vec<&str> = r.poly.vars().iter().map(|s| s.as_str()).collect();
    let v: Vec<Q> = (0..2).map(|i| if upper[i] { b.hi[i].clone() } else { b.lo[i].clone() }).collect();
    let sign: Vec<Q> = (0..2).map(|i| if upper[i] { -Q::one() } else { Q::one() }).collect();
    let len: Vec<Q> = (0..2).map(|i| &b.hi[i] - &b.lo[i]).collect();
    let mut out = Vec::with_capacity(2);
    for lead in 0..2 {
        // Local variables (u_0, u_1) with the lead coordinate X_lead = u_lead and
        // the other X_other = (L_other/L_lead) u_lead u_other, u_other in [0, 1].
        let other = 1 - lead;
        let ratio = &len[other] / &len[lead];
        let u_lead = PolyQ::var(&names, lead);
        let u_other = PolyQ::var(&names, other);
        let mut local_of: Vec<PolyQ> = vec![PolyQ::zero(&names), PolyQ::zero(&names)];
        local_of[lead] = PolyQ::constant(&names, v[lead].clone()).add(&u_lead.scale(&sign[lead]));
        local_of[other] = PolyQ::constant(&names, v[other].clone()).add(&u_lead.mul(&u_other).scale(&(&ratio * &sign[other])));
        let (poly, _) = r.poly.substitute(&local_of).factor_out_power(lead);
        let mut lo = vec![Q::zero(), Q::zero()];
        let mut hi = vec![Q::zero(), Q::zero()];
        hi[lead] = len[lead].clone();
        hi[other] = Q::one();
        lo[lead] = Q::zero();
        let mut local = IntervalBox::closed(lo, hi);
        // u_lead = 0 is the blown-up vertex (excluded); u_other = 0 is the face
        // through the vertex transverse to `other`; u_lead = L maps to the far face.
        local.lo_open[lead] = true;
        local.lo_open[other] = if upper[other] { b.hi_open[other] } else { b.lo_open[other] };
        local.hi_open[lead] = if upper[lead] { b.lo_open[lead] } else { b.hi_open[lead] };
        local.hi_open[other] = false;
        let map = match &r.map {
            None => local_of,
            Some(m) => m.iter().map(|p| p.substitute(&local_of)).collect(),
        };
        out.push(Region { local, poly, map: Some(map), blown: true });
    }
    let b = out.pop().expect("two regions");
    let a = out.pop().expect("two regions");
    [a, b]
}

/// `levels[i]` counts the bisections of axis `i` along the current branch.
fn certify_region(r: &Region, bern: Bernstein, b: IntervalBox, reference: &[Q], levels: &[usize], opts: CertifyOptions) -> Outcome {
    if bern.certifies_positive(&b) {
        return Outcome::Proved(1);
    }
    let d = b.dim();
    // Exact negative values at vertices refute the claim.
    for up in all_vertices(d) {
        let v = bern.vertex(&up);
        if v.is_negative() {
            if !on_open_face(&b, &up) {
                let x: Vec<Q> = (0..d).map(|i| if up[i] { b.hi[i].clone() } else { b.lo[i].clone() }).collect();
                return Outcome::Refuted(to_original(r, &x), v, 1);
            }
            if let Some((x, val)) = witness_near(r, &b, &up) {
                return Outcome::Refuted(x, val, 1);
            }
        }
    }
    if opts.blow_up && !r.blown && d == 2 {
        for up in all_vertices(2) {
            if bern.vertex(&up).is_zero() && on_open_face(&b, &up) {
                let regions = blow_up(r, &b, &up);
                let mut used = 0;
                for reg in regions.iter() {
                    let bb = Bernstein::from_poly(&reg.poly, &reg.local);
                    let refw: Vec<Q> = (0..2).map(|i| &reg.local.hi[i] - &reg.local.lo[i]).collect();
                    match certify_region(reg, bb, reg.local.clone(), &refw, &[0, 0], opts) {
                        Outcome::Proved(n) => used += n,
                        Outcome::Refuted(x, v, n) => return Outcome::Refuted(x, v, used + n),
                        Outcome::Inconclusive(s, n) => return Outcome::Inconclusive(s, used + n),
                    }
                }
                return Outcome::Proved(used);
            }
        }
    }
    // Split where the control net is furthest from the polynomial; when the
    // net is exact along every axis, split the widest (normalised) edge.
    let err = bern.net_error();
    let mut axis = 0;
    for i in 1..d {
        if err[i] > err[axis] {
            axis = i;
        }
    }
    if err[axis].is_zero() {
        let w = widths(&b, reference);
        for i in 1..d {
            if (w[i] > w[axis] && bern.deg[i] > 0) || bern.deg[axis] == 0 {
                axis = i;
            }
        }
    }
    if levels[axis] >= opts.max_depth {
        let names = r.poly.vars().to_vec();
        let what = if r.map.is_some() { " (blown-up chart)" } else { "" };
        return Outcome::Inconclusive(format!("{}{}", b.describe(&names), what), 1);
    }
    let mut next = levels.to_vec();
    next[axis] += 1;
    let (ba, bb) = bern.split(axis);
    let (xa, xb) = b.split(axis);
    let (ra, rb) = rayon::join(
        || certify_region(r, ba, xa, reference, &next, opts),
        || certify_region(r, bb, xb, reference, &next, opts),
    );
    match (ra, rb) {
        (Outcome::Proved(a), Outcome::Proved(b)) => Outcome::Proved(a + b),
        (Outcome::Refuted(x, v, a), other) | (other, Outcome::Refuted(x, v, a)) => {
            let n = match other {
                Outcome::Proved(n) | Outcome::Refuted(_, _, n) | Outcome::Inconclusive(_, n) => n,
            };
            Outcome::Refuted(x, v, a + n)
        }
        (Outcome::Inconclusive(s, a), Outcome::Proved(n)) | (Outcome::Proved(n), Outcome::Inconclusive(s, a)) => Outcome::Inconclusive(s, a + n),
        (Outcome::Inconclusive(s, a), Outcome::Inconclusive(_, n)) => Outcome::Inconclusive(s, a + n),
    }
}

/// Certifies `poly > 0` on `domain` (minus its open faces).
pub fn certify_positive(name: &str, poly: &PolyQ, domain: &IntervalBox, opts: CertifyOptions) -> Certificate {
    let claim = format!("{name} > 0 on {}", domain.describe(poly.vars()));
    if poly.is_zero() {
        return Certificate { claim, status: Status::Refuted { witness: vec![], value: "0".into() }, boxes_used: 0 };
    }
    let region = Region { local: domain.clone(), poly: poly.clone(), map: None, blown: false };
    let bern = Bernstein::from_poly(poly, domain);
    let reference: Vec<Q> = (0..domain.dim()).map(|i| &domain.hi[i] - &domain.lo[i]).collect();
    match certify_region(&region, bern, domain.clone(), &reference, &vec![0; domain.dim()], opts) {
        Outcome::Proved(n) => Certificate { claim, status: Status::Proved, boxes_used: n },
        Outcome::Refuted(x, v, n) => Certificate {
            claim,
            status: Status::Refuted { witness: x.iter().map(|c| c.to_string()).collect(), value: v.to_string() },
            boxes_used: n,
        },
        Outcome::Inconclusive(b, n) => Certificate { claim, status: Status::Inconclusive { depth: opts.max_depth, region: b }, boxes_used: n },
    }
}
