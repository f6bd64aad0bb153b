//! Sparse multivariate polynomials with exact rational coefficients, and a
//! small parser for the textual form used by the embedded data file.

use std::collections::BTreeMap;
use std::fmt;

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact rational number.
pub type Q = BigRational;

/// Builds an exact rational `n/d`.
pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Builds an exact integer.
pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Exact rational value of a finite `f64`.
pub fn q_from_f64(x: f64) -> Result<Q> {
    Q::from_float(x).ok_or_else(|| Error::Domain(format!("{x} is not finite")))
}

/// Nearest `f64` to a rational.
pub fn q_to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        // Fall back to a scaled division for very large numerators/denominators.
        let n = x.numer().to_f64().unwrap_or(f64::NAN);
        let d = x.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// A polynomial over named variables with rational coefficients, stored in
/// canonical form (no zero coefficients, exponent vectors in lexicographic order).
#[derive(Clone, PartialEq, Eq)]
pub struct PolyQ {
    vars: Vec<String>,
    terms: BTreeMap<Vec<u32>, Q>,
}

impl fmt::Debug for PolyQ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PolyQ[{}]({})", self.vars.join(","), self)
    }
}

impl fmt::Display for PolyQ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in self.terms.iter().rev() {
            let neg = c.is_negative();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            first = false;
            let a = c.abs();
            let mono: Vec<String> = e
                .iter()
                .zip(&self.vars)
                .filter(|(k, _)| **k > 0)
                .map(|(k, v)| if *k == 1 { v.clone() } else { format!("{v}^{k}") })
                .collect();
            if mono.is_empty() {
                write!(f, "{a}")?;
            } else if a.is_one() {
                write!(f, "{}", mono.join("*"))?;
            } else {
                write!(f, "{a}*{}", mono.join("*"))?;
            }
        }
        Ok(())
    }
}

impl PolyQ {
    /// The zero polynomial over `vars`.
    pub fn zero(vars: &[&str]) -> Self {
        Self { vars: vars.iter().map(|s| s.to_string()).collect(), terms: BTreeMap::new() }
    }

    fn zero_like(&self) -> Self {
        Self { vars: self.vars.clone(), terms: BTreeMap::new() }
    }

    /// A constant polynomial.
    pub fn constant(vars: &[&str], c: Q) -> Self {
        let mut p = Self::zero(vars);
        p.add_term(vec![0; vars.len()], c);
        p
    }

    /// The `i`-th variable.
    pub fn var(vars: &[&str], i: usize) -> Self {
        let mut e = vec![0; vars.len()];
        e[i] = 1;
        let mut p = Self::zero(vars);
        p.add_term(e, Q::one());
        p
    }

    /// Variable names.
    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    /// Index of a variable by name.
    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == name)
    }

    /// Iterator over `(exponents, coefficient)` pairs.
    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Q)> {
        self.terms.iter()
    }

    /// Number of nonzero terms.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    /// `true` for the zero polynomial.
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_term(&mut self, e: Vec<u32>, c: Q) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&e) {
            Some(v) => {
                *v += c;
                if v.is_zero() {
                    self.terms.remove(&e);
                }
            }
            None => {
                self.terms.insert(e, c);
            }
        }
    }

    fn check_vars(&self, other: &Self) {
        assert_eq!(self.vars, other.vars, "polynomials over different variables");
    }

    /// Sum.
    pub fn add(&self, other: &Self) -> Self {
        self.check_vars(other);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    /// Difference.
    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    /// Negation.
    pub fn neg(&self) -> Self {
        Self { vars: self.vars.clone(), terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect() }
    }

    /// Multiplication by a rational scalar.
    pub fn scale(&self, c: &Q) -> Self {
        if c.is_zero() {
            return self.zero_like();
        }
        Self { vars: self.vars.clone(), terms: self.terms.iter().map(|(e, v)| (e.clone(), v * c)).collect() }
    }

    /// Product.
    pub fn mul(&self, other: &Self) -> Self {
        self.check_vars(other);
        let mut out = self.zero_like();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, c1 * c2);
            }
        }
        out
    }

    /// Non-negative integer power.
    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::constant(&self.var_refs(), Q::one());
        let mut base = self.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    fn var_refs(&self) -> Vec<&str> {
        self.vars.iter().map(|s| s.as_str()).collect()
    }

    /// Largest exponent of variable `i`.
    pub fn degree_in(&self, i: usize) -> u32 {
        self.terms.keys().map(|e| e[i]).max().unwrap_or(0)
    }

    /// Smallest exponent of variable `i` over all terms.
    pub fn min_degree_in(&self, i: usize) -> u32 {
        self.terms.keys().map(|e| e[i]).min().unwrap_or(0)
    }

    /// Divides by `x_i^k` where `k` is the smallest exponent of `x_i`;
    /// returns the quotient and `k`.
    pub fn factor_out_power(&self, i: usize) -> (Self, u32) {
        let k = self.min_degree_in(i);
        let terms = self
            .terms
            .iter()
            .map(|(e, c)| {
                let mut e = e.clone();
                e[i] -= k;
                (e, c.clone())
            })
            .collect();
        (Self { vars: self.vars.clone(), terms }, k)
    }

    /// Exact evaluation.
    pub fn eval(&self, x: &[Q]) -> Q {
        assert_eq!(x.len(), self.vars.len());
        let mut powers: Vec<Vec<Q>> = Vec::with_capacity(x.len());
        for (i, xi) in x.iter().enumerate() {
            let d = self.degree_in(i) as usize;
            let mut p = Vec::with_capacity(d + 1);
            p.push(Q::one());
            for k in 1..=d {
                let next = &p[k - 1] * xi;
                p.push(next);
            }
            powers.push(p);
        }
        let mut sum = Q::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (i, k) in e.iter().enumerate() {
                if *k > 0 {
                    t *= &powers[i][*k as usize];
                }
            }
            sum += t;
        }
        sum
    }

    /// Floating-point evaluation (for sampling and diagnostics only).
    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| q_to_f64(c) * e.iter().zip(x).map(|(k, xi)| xi.powi(*k as i32)).product::<f64>())
            .sum()
    }

    /// Substitutes `x_i -> subs[i]`, where every `subs[i]` is a polynomial over a
    /// common (possibly different) variable set.
    pub fn substitute(&self, subs: &[PolyQ]) -> PolyQ {
        assert_eq!(subs.len(), self.vars.len());
        let target: Vec<&str> = subs[0].var_refs();
        let mut cache: Vec<Vec<PolyQ>> = subs.iter().map(|s| vec![PolyQ::constant(&target, Q::one()), s.clone()]).collect();
        let mut out = PolyQ::zero(&target);
        for (e, c) in &self.terms {
            let mut t = PolyQ::constant(&target, c.clone());
            for (i, k) in e.iter().enumerate() {
                let k = *k as usize;
                while cache[i].len() <= k {
                    let next = cache[i].last().expect("nonempty").mul(&subs[i]);
                    cache[i].push(next);
                }
                if k > 0 {
                    t = t.mul(&cache[i][k]);
                }
            }
            out = out.add(&t);
        }
        out
    }

    /// Fixes variable `i` to the value `v` (the variable stays in the list).
    pub fn fix(&self, i: usize, v: &Q) -> PolyQ {
        let vars = self.var_refs();
        let subs: Vec<PolyQ> = (0..vars.len()).map(|j| if j == i { PolyQ::constant(&vars, v.clone()) } else { PolyQ::var(&vars, j) }).collect();
        self.substitute(&subs)
    }

    /// Re-expresses the polynomial over a larger variable list containing all
    /// current variables.
    pub fn embed(&self, vars: &[&str]) -> Result<PolyQ> {
        let map: Vec<usize> = self
            .vars
            .iter()
            .map(|v| vars.iter().position(|w| w == v).ok_or_else(|| Error::Domain(format!("variable {v} missing"))))
            .collect::<Result<_>>()?;
        let mut out = PolyQ::zero(vars);
        for (e, c) in &self.terms {
            let mut f = vec![0; vars.len()];
            for (i, k) in e.iter().enumerate() {
                f[map[i]] = *k;
            }
            out.add_term(f, c.clone());
        }
        Ok(out)
    }

    /// `true` when every coefficient is positive (and the polynomial is nonzero).
    pub fn all_coefficients_positive(&self) -> bool {
        !self.terms.is_empty() && self.terms.values().all(|c| c.is_positive())
    }
}

// ---------------------------------------------------------------------------
// Parsing

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Q),
    Ident(String),
    Op(char),
}

fn tokenize(s: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            let lit: String = chars[start..i].iter().collect();
            out.push(Tok::Num(parse_decimal(&lit)?));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^()".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else {
            return Err(Error::Parse(format!("unexpected character '{c}'")));
        }
    }
    Ok(out)
}

fn parse_decimal(lit: &str) -> Result<Q> {
    let mut parts = lit.split('.');
    let int = parts.next().unwrap_or("");
    let frac = parts.next().unwrap_or("");
    if parts.next().is_some() || (int.is_empty() && frac.is_empty()) {
        return Err(Error::Parse(format!("bad number '{lit}'")));
    }
    let digits = format!("{int}{frac}");
    let n: BigInt = digits.parse().map_err(|_| Error::Parse(format!("bad number '{lit}'")))?;
    let d = num::pow(BigInt::from(10), frac.len());
    Ok(Q::new(n, d))
}

struct Parser<'a> {
    toks: Vec<Tok>,
    pos: usize,
    vars: &'a [&'a str],
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Result<PolyQ> {
        let mut acc = self.term()?;
        while let Some(Tok::Op(c)) = self.peek() {
            let c = *c;
            if c != '+' && c != '-' {
                break;
            }
            self.pos += 1;
            let rhs = self.term()?;
            acc = if c == '+' { acc.add(&rhs) } else { acc.sub(&rhs) };
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<PolyQ> {
        let mut acc = self.unary()?;
        while let Some(Tok::Op(c)) = self.peek() {
            let c = *c;
            if c != '*' && c != '/' {
                break;
            }
            self.pos += 1;
            let rhs = self.unary()?;
            acc = if c == '*' {
                acc.mul(&rhs)
            } else {
                // Division only by nonzero constants.
                if rhs.terms.len() != 1 || rhs.terms.keys().next().is_some_and(|e| e.iter().any(|k| *k > 0)) {
                    return Err(Error::Parse("division by a non-constant".into()));
                }
                let c = rhs.terms.values().next().expect("one term").clone();
                acc.scale(&c.recip())
            };
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<PolyQ> {
        if let Some(Tok::Op('-')) = self.peek() {
            self.pos += 1;
            return Ok(self.unary()?.neg());
        }
        if let Some(Tok::Op('+')) = self.peek() {
            self.pos += 1;
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<PolyQ> {
        let base = self.atom()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.pos += 1;
            match self.next() {
                Some(Tok::Num(n)) if n.is_integer() && !n.is_negative() => {
                    let k = n.to_integer().to_u32().ok_or_else(|| Error::Parse("exponent too large".into()))?;
                    return Ok(base.pow(k));
                }
                other => return Err(Error::Parse(format!("bad exponent {other:?}"))),
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<PolyQ> {
        match self.next() {
            Some(Tok::Num(n)) => Ok(PolyQ::constant(self.vars, n)),
            Some(Tok::Ident(name)) => {
                let i = self.vars.iter().position(|v| *v == name).ok_or_else(|| Error::Parse(format!("unknown variable '{name}'")))?;
                Ok(PolyQ::var(self.vars, i))
            }
            Some(Tok::Op('(')) => {
                let e = self.expr()?;
                match self.next() {
                    Some(Tok::Op(')')) => Ok(e),
                    other => Err(Error::Parse(format!("expected ')', found {other:?}"))),
                }
            }
            other => Err(Error::Parse(format!("unexpected token {other:?}"))),
        }
    }
}

/// Parses an expression built from rational literals (integers or decimals),
/// the variables `vars`, `+ - * /` (division by constants only), `^` with a
/// non-negative integer exponent, and parentheses.
pub fn parse_poly(src: &str, vars: &[&str]) -> Result<PolyQ> {
    let toks = tokenize(src)?;
    let mut p = Parser { toks, pos: 0, vars };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(Error::Parse(format!("trailing input at token {}", p.pos)));
    }
    Ok(e)
}

/// Parses `name = expression ;` statements; `#` starts a comment line.
pub fn parse_definitions(src: &str, vars: &[&str]) -> Result<Vec<(String, PolyQ)>> {
    let cleaned: String = src.lines().filter(|l| !l.trim_start().starts_with('#')).collect::<Vec<_>>().join("\n");
    let mut out = Vec::new();
    for stmt in cleaned.split(';') {
        let stmt = stmt.trim();
        if stmt.is_empty() {
            continue;
        }
        let (name, body) = stmt.split_once('=').ok_or_else(|| Error::Parse(format!("missing '=' in '{stmt}'")))?;
        let name = name.trim().to_string();
        let p = parse_poly(body, vars).map_err(|e| Error::Parse(format!("{name}: {e}")))?;
        out.push((name, p));
    }
    Ok(out)
}
