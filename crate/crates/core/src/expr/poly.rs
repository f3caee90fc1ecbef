//! Sparse multivariate polynomials with exact rational coefficients.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{Expr, Node};

/// Polynomial keyed by exponent vectors over named variables.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    vars: Vec<String>,
    terms: BTreeMap<Vec<u32>, BigRational>,
}

impl Poly {
    pub fn zero() -> Poly {
        Poly { vars: Vec::new(), terms: BTreeMap::new() }
    }

    pub fn constant(c: BigRational) -> Poly {
        let mut p = Poly::zero();
        if !c.is_zero() {
            p.terms.insert(Vec::new(), c);
        }
        p
    }

    pub fn var(name: &str) -> Poly {
        Poly { vars: vec![name.to_string()], terms: BTreeMap::from([(vec![1], BigRational::one())]) }
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn with_vars(&self, vars: &[String]) -> Poly {
        let map: Vec<usize> = self.vars.iter().map(|v| vars.iter().position(|w| w == v).unwrap()).collect();
        let mut terms = BTreeMap::new();
        for (e, c) in &self.terms {
            let mut ne = vec![0u32; vars.len()];
            for (i, k) in e.iter().enumerate() {
                ne[map[i]] = *k;
            }
            terms.insert(ne, c.clone());
        }
        Poly { vars: vars.to_vec(), terms }
    }

    fn unify(a: &Poly, b: &Poly) -> (Poly, Poly) {
        let mut vars = a.vars.clone();
        for v in &b.vars {
            if !vars.contains(v) {
                vars.push(v.clone());
            }
        }
        (a.with_vars(&vars), b.with_vars(&vars))
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let (mut a, b) = Poly::unify(self, other);
        for (e, c) in b.terms {
            let entry = a.terms.entry(e).or_insert_with(BigRational::zero);
            *entry += c;
        }
        a.terms.retain(|_, c| !c.is_zero());
        a
    }

    pub fn scale(&self, k: &BigRational) -> Poly {
        if k.is_zero() {
            return Poly { vars: self.vars.clone(), terms: BTreeMap::new() };
        }
        Poly { vars: self.vars.clone(), terms: self.terms.iter().map(|(e, c)| (e.clone(), c * k)).collect() }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let (a, b) = Poly::unify(self, other);
        let mut terms: BTreeMap<Vec<u32>, BigRational> = BTreeMap::new();
        for (ea, ca) in &a.terms {
            for (eb, cb) in &b.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                *terms.entry(e).or_insert_with(BigRational::zero) += ca * cb;
            }
        }
        terms.retain(|_, c| !c.is_zero());
        Poly { vars: a.vars, terms }
    }

    pub fn pow(&self, n: u32) -> Poly {
        let mut r = Poly::constant(BigRational::one());
        for _ in 0..n {
            r = r.mul(self);
        }
        r
    }

    /// Converts a polynomial expression; `None` for anything non-polynomial.
    pub fn from_expr(e: &Expr) -> Option<Poly> {
        Some(match e.node() {
            Node::Var(v) => Poly::var(v),
            Node::Const(c) => Poly::constant(c.clone()),
            Node::Add(ts) => {
                let mut acc = Poly::zero();
                for t in ts {
                    acc = acc.add(&Poly::from_expr(t)?);
                }
                acc
            }
            Node::Mul(fs) => {
                let mut acc = Poly::constant(BigRational::one());
                for f in fs {
                    acc = acc.mul(&Poly::from_expr(f)?);
                }
                acc
            }
            Node::Pow(b, n) if *n >= 0 => Poly::from_expr(b)?.pow(*n as u32),
            Node::Div(a, b) => {
                let d = Poly::from_expr(b)?;
                let c = d.as_constant()?;
                if c.is_zero() {
                    return None;
                }
                Poly::from_expr(a)?.scale(&c.recip())
            }
            _ => return None,
        })
    }

    pub fn as_constant(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => {
                let (e, c) = self.terms.iter().next().unwrap();
                e.iter().all(|k| *k == 0).then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn to_expr(&self) -> Expr {
        let mut terms = Vec::new();
        for (e, c) in &self.terms {
            let mut fs = vec![Expr::constant(c.clone())];
            for (i, k) in e.iter().enumerate() {
                if *k > 0 {
                    fs.push(Expr::var(&self.vars[i]).pow(*k as i64));
                }
            }
            terms.push(Expr::product(fs));
        }
        Expr::sum(terms)
    }

    fn index(&self, x: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == x)
    }

    /// Antiderivative in `x` with zero constant at `x = 0`.
    pub fn integrate(&self, x: &str) -> Poly {
        let mut p = self.clone();
        let i = match p.index(x) {
            Some(i) => i,
            None => {
                p = p.with_vars(&[p.vars.clone(), vec![x.to_string()]].concat());
                p.vars.len() - 1
            }
        };
        let mut terms = BTreeMap::new();
        for (e, c) in &p.terms {
            let mut ne = e.clone();
            ne[i] += 1;
            terms.insert(ne, c / BigRational::from_integer(BigInt::from(e[i] + 1)));
        }
        Poly { vars: p.vars, terms }
    }

    pub fn diff(&self, x: &str) -> Poly {
        let Some(i) = self.index(x) else {
            return Poly { vars: self.vars.clone(), terms: BTreeMap::new() };
        };
        let mut terms = BTreeMap::new();
        for (e, c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut ne = e.clone();
            ne[i] -= 1;
            terms.insert(ne, c * BigRational::from_integer(BigInt::from(e[i])));
        }
        Poly { vars: self.vars.clone(), terms }
    }

    /// Substitutes a constant for `x`, exactly.
    pub fn at(&self, x: &str, value: &BigRational) -> Poly {
        let Some(i) = self.index(x) else { return self.clone() };
        let mut out = Poly { vars: self.vars.clone(), terms: BTreeMap::new() };
        for (e, c) in &self.terms {
            let mut ne = e.clone();
            let mut k = c.clone();
            for _ in 0..e[i] {
                k *= value;
            }
            ne[i] = 0;
            *out.terms.entry(ne).or_insert_with(BigRational::zero) += k;
        }
        out.terms.retain(|_, c| !c.is_zero());
        out
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum::<u32>()).max().unwrap_or(0)
    }
}
