//! Exact symbolic scalar expressions over named coordinates.
//!
//! Constants are arbitrary-precision rationals. Simplification is limited to
//! constant folding, the 0/1 identities and flattening of nested sums,
//! products and powers; everything else is left structurally as built.

mod parse;
mod poly;
mod print;
mod table;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use parse::{parse_expr, ParseError};
pub use poly::Poly;
pub use table::Table;

/// Elementary functions admitted by the grammar.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

#[derive(Debug, PartialEq)]
pub enum Node {
    Var(Arc<str>),
    Const(BigRational),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Pow(Expr, i64),
    Div(Expr, Expr),
    Func(Func, Expr),
    /// Derivative of the given order of a tabulated function, applied to an argument.
    Table(Arc<Table>, u8, Expr),
    /// `∫_0^upper integrand d(var)`, evaluated numerically.
    Integral(Expr, Arc<str>, Expr),
}

/// Immutable, cheaply clonable expression tree.
#[derive(Clone, Debug)]
pub struct Expr(Arc<Node>);

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || *self.0 == *other.0
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("unbound coordinate `{0}`")]
    Unbound(String),
    #[error("domain error: {0}")]
    Domain(String),
}

/// Source of coordinate values during evaluation.
pub trait Env {
    fn value(&self, name: &str) -> Option<f64>;
}

impl Env for HashMap<String, f64> {
    fn value(&self, name: &str) -> Option<f64> {
        self.get(name).copied()
    }
}

impl Env for [(&str, f64)] {
    fn value(&self, name: &str) -> Option<f64> {
        self.iter().find(|(n, _)| *n == name).map(|(_, v)| *v)
    }
}

impl<const N: usize> Env for [(&str, f64); N] {
    fn value(&self, name: &str) -> Option<f64> {
        self.as_slice().value(name)
    }
}

struct Overlay<'a> {
    name: &'a str,
    value: f64,
    rest: &'a dyn Env,
}

impl Env for Overlay<'_> {
    fn value(&self, name: &str) -> Option<f64> {
        if name == self.name {
            Some(self.value)
        } else {
            self.rest.value(name)
        }
    }
}

/// Ordered list of unique coordinate names.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chart {
    names: Vec<Arc<str>>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("duplicate coordinate `{0}` in chart")]
pub struct DuplicateCoordinate(pub String);

impl Chart {
    pub fn new<S: AsRef<str>>(names: &[S]) -> Result<Chart, DuplicateCoordinate> {
        let mut out: Vec<Arc<str>> = Vec::with_capacity(names.len());
        for n in names {
            let n = n.as_ref();
            if out.iter().any(|m| &**m == n) {
                return Err(DuplicateCoordinate(n.to_string()));
            }
            out.push(Arc::from(n));
        }
        Ok(Chart { names: out })
    }

    /// The 2-jet chart (x, y, z, p, q, r, s, t).
    pub fn j2() -> Chart {
        Chart::new(&["x", "y", "z", "p", "q", "r", "s", "t"]).unwrap()
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[Arc<str>] {
        &self.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| &**n == name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index_of(name).is_some()
    }

    /// Chart with extra coordinates appended.
    pub fn extended<S: AsRef<str>>(&self, extra: &[S]) -> Result<Chart, DuplicateCoordinate> {
        let mut all: Vec<String> = self.names.iter().map(|n| n.to_string()).collect();
        all.extend(extra.iter().map(|s| s.as_ref().to_string()));
        Chart::new(&all)
    }
}

/// A point of a chart: one value per coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub chart: Arc<Chart>,
    pub values: Vec<f64>,
}

impl Point {
    pub fn new(chart: Arc<Chart>, values: Vec<f64>) -> Point {
        assert_eq!(chart.dim(), values.len(), "point dimension mismatch");
        Point { chart, values }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.chart.index_of(name).map(|i| self.values[i])
    }

    pub fn set(&mut self, name: &str, v: f64) {
        let i = self.chart.index_of(name).expect("unknown coordinate");
        self.values[i] = v;
    }
}

impl Env for Point {
    fn value(&self, name: &str) -> Option<f64> {
        self.get(name)
    }
}

fn q(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

impl Expr {
    fn new(node: Node) -> Expr {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn var(name: &str) -> Expr {
        Expr::new(Node::Var(Arc::from(name)))
    }

    pub fn constant(c: BigRational) -> Expr {
        Expr::new(Node::Const(c))
    }

    pub fn int(n: i64) -> Expr {
        Expr::constant(q(n))
    }

    pub fn ratio(n: i64, d: i64) -> Expr {
        Expr::constant(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn as_const(&self) -> Option<&BigRational> {
        match self.node() {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_zero_const(&self) -> bool {
        self.as_const().is_some_and(|c| c.is_zero())
    }

    pub fn is_one_const(&self) -> bool {
        self.as_const().is_some_and(|c| c.is_one())
    }

    pub fn sum(terms: Vec<Expr>) -> Expr {
        let mut flat = Vec::with_capacity(terms.len());
        let mut c = BigRational::zero();
        for t in terms {
            match t.node() {
                Node::Const(k) => c += k,
                Node::Add(inner) => {
                    for u in inner {
                        match u.node() {
                            Node::Const(k) => c += k,
                            _ => flat.push(u.clone()),
                        }
                    }
                }
                _ => flat.push(t),
            }
        }
        if !c.is_zero() {
            flat.push(Expr::constant(c));
        }
        match flat.len() {
            0 => Expr::zero(),
            1 => flat.pop().unwrap(),
            _ => Expr::new(Node::Add(flat)),
        }
    }

    pub fn product(factors: Vec<Expr>) -> Expr {
        let mut flat = Vec::with_capacity(factors.len());
        let mut c = BigRational::one();
        for f in factors {
            match f.node() {
                Node::Const(k) => c *= k,
                Node::Mul(inner) => {
                    for u in inner {
                        match u.node() {
                            Node::Const(k) => c *= k,
                            _ => flat.push(u.clone()),
                        }
                    }
                }
                _ => flat.push(f),
            }
            if c.is_zero() {
                return Expr::zero();
            }
        }
        if flat.is_empty() {
            return Expr::constant(c);
        }
        if !c.is_one() {
            flat.insert(0, Expr::constant(c));
        }
        if flat.len() == 1 {
            return flat.pop().unwrap();
        }
        Expr::new(Node::Mul(flat))
    }

    pub fn add(&self, other: &Expr) -> Expr {
        Expr::sum(vec![self.clone(), other.clone()])
    }

    pub fn sub(&self, other: &Expr) -> Expr {
        Expr::sum(vec![self.clone(), other.neg()])
    }

    pub fn mul(&self, other: &Expr) -> Expr {
        Expr::product(vec![self.clone(), other.clone()])
    }

    pub fn neg(&self) -> Expr {
        Expr::product(vec![Expr::int(-1), self.clone()])
    }

    pub fn scale(&self, c: &BigRational) -> Expr {
        Expr::product(vec![Expr::constant(c.clone()), self.clone()])
    }

    pub fn div(&self, other: &Expr) -> Expr {
        if let Some(d) = other.as_const() {
            if d.is_one() {
                return self.clone();
            }
            if !d.is_zero() {
                return self.scale(&d.recip());
            }
        }
        if self.is_zero_const() {
            return Expr::zero();
        }
        Expr::new(Node::Div(self.clone(), other.clone()))
    }

    pub fn pow(&self, n: i64) -> Expr {
        if n == 0 {
            return Expr::one();
        }
        if n == 1 {
            return self.clone();
        }
        match self.node() {
            Node::Const(c) => {
                if c.is_zero() && n < 0 {
                    return Expr::new(Node::Pow(self.clone(), n));
                }
                let mut r = BigRational::one();
                let base = if n < 0 { c.recip() } else { c.clone() };
                for _ in 0..n.unsigned_abs() {
                    r *= &base;
                }
                Expr::constant(r)
            }
            Node::Pow(b, m) => b.pow(m * n),
            _ => Expr::new(Node::Pow(self.clone(), n)),
        }
    }

    pub fn apply(f: Func, arg: &Expr) -> Expr {
        if let Some(c) = arg.as_const() {
            let folded = match f {
                Func::Sin | Func::Sqrt if c.is_zero() => Some(Expr::zero()),
                Func::Cos | Func::Exp if c.is_zero() => Some(Expr::one()),
                Func::Log | Func::Sqrt if c.is_one() => Some(Expr::int(i64::from(f == Func::Sqrt))),
                _ => None,
            };
            if let Some(e) = folded {
                return e;
            }
        }
        Expr::new(Node::Func(f, arg.clone()))
    }

    pub fn table(t: Arc<Table>, order: u8, arg: &Expr) -> Expr {
        if order > 3 {
            return Expr::zero();
        }
        Expr::new(Node::Table(t, order, arg.clone()))
    }

    pub fn integral(integrand: &Expr, var: &str, upper: &Expr) -> Expr {
        if integrand.is_zero_const() {
            return Expr::zero();
        }
        Expr::new(Node::Integral(integrand.clone(), Arc::from(var), upper.clone()))
    }

    /// Names of all free coordinates, in first-occurrence order.
    pub fn variables(&self) -> Vec<String> {
        fn walk(e: &Expr, out: &mut Vec<String>) {
            match e.node() {
                Node::Var(v) => {
                    if !out.iter().any(|o| o == &**v) {
                        out.push(v.to_string());
                    }
                }
                Node::Const(_) => {}
                Node::Add(ts) | Node::Mul(ts) => ts.iter().for_each(|t| walk(t, out)),
                Node::Pow(b, _) => walk(b, out),
                Node::Div(a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
                Node::Func(_, a) | Node::Table(_, _, a) => walk(a, out),
                Node::Integral(f, v, u) => {
                    let mut inner = Vec::new();
                    walk(f, &mut inner);
                    for n in inner {
                        if n != **v && !out.contains(&n) {
                            out.push(n);
                        }
                    }
                    walk(u, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }

    /// Exact partial derivative with respect to a coordinate.
    pub fn diff(&self, x: &str) -> Expr {
        match self.node() {
            Node::Var(v) => Expr::int(i64::from(&**v == x)),
            Node::Const(_) => Expr::zero(),
            Node::Add(ts) => Expr::sum(ts.iter().map(|t| t.diff(x)).collect()),
            Node::Mul(fs) => {
                let mut terms = Vec::new();
                for i in 0..fs.len() {
                    let di = fs[i].diff(x);
                    if di.is_zero_const() {
                        continue;
                    }
                    let mut fac: Vec<Expr> = fs.clone();
                    fac[i] = di;
                    terms.push(Expr::product(fac));
                }
                Expr::sum(terms)
            }
            Node::Pow(b, n) => {
                let db = b.diff(x);
                if db.is_zero_const() {
                    return Expr::zero();
                }
                Expr::product(vec![Expr::int(*n), b.pow(n - 1), db])
            }
            Node::Div(a, b) => {
                let da = a.diff(x);
                let db = b.diff(x);
                let first = da.div(b);
                if db.is_zero_const() {
                    return first;
                }
                first.sub(&a.mul(&db).div(&b.pow(2)))
            }
            Node::Func(f, a) => {
                let da = a.diff(x);
                if da.is_zero_const() {
                    return Expr::zero();
                }
                let outer = match f {
                    Func::Sin => Expr::apply(Func::Cos, a),
                    Func::Cos => Expr::apply(Func::Sin, a).neg(),
                    Func::Exp => self.clone(),
                    Func::Log => Expr::one().div(a),
                    Func::Sqrt => Expr::one().div(&Expr::int(2).mul(self)),
                };
                outer.mul(&da)
            }
            Node::Table(t, k, a) => {
                let da = a.diff(x);
                if da.is_zero_const() {
                    return Expr::zero();
                }
                Expr::table(t.clone(), k + 1, a).mul(&da)
            }
            Node::Integral(f, v, u) => {
                let du = u.diff(x);
                let outer = if du.is_zero_const() {
                    Expr::zero()
                } else {
                    f.subst(v, u).mul(&du)
                };
                // parameters of the integrand other than the integration variable
                let df = if &**v == x { Expr::zero() } else { f.diff(x) };
                if df.is_zero_const() {
                    outer
                } else {
                    outer.add(&Expr::integral(&df, v, u))
                }
            }
        }
    }

    /// Replace every occurrence of coordinate `x` by `by`.
    pub fn subst(&self, x: &str, by: &Expr) -> Expr {
        self.subst_map(&|name| if name == x { Some(by.clone()) } else { None })
    }

    /// Simultaneous substitution driven by a lookup.
    pub fn subst_map(&self, f: &dyn Fn(&str) -> Option<Expr>) -> Expr {
        match self.node() {
            Node::Var(v) => f(v).unwrap_or_else(|| self.clone()),
            Node::Const(_) => self.clone(),
            Node::Add(ts) => Expr::sum(ts.iter().map(|t| t.subst_map(f)).collect()),
            Node::Mul(fs) => Expr::product(fs.iter().map(|t| t.subst_map(f)).collect()),
            Node::Pow(b, n) => b.subst_map(f).pow(*n),
            Node::Div(a, b) => a.subst_map(f).div(&b.subst_map(f)),
            Node::Func(g, a) => Expr::apply(*g, &a.subst_map(f)),
            Node::Table(t, k, a) => Expr::table(t.clone(), *k, &a.subst_map(f)),
            Node::Integral(g, v, u) => {
                let inner = g.subst_map(&|name| if name == &**v { None } else { f(name) });
                Expr::integral(&inner, v, &u.subst_map(f))
            }
        }
    }

    /// Floating-point evaluation; non-finite results are reported as domain errors.
    pub fn eval(&self, env: &dyn Env) -> Result<f64, EvalError> {
        let v = self.eval_raw(env)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::Domain(format!("non-finite value in {self}")))
        }
    }

    fn eval_raw(&self, env: &dyn Env) -> Result<f64, EvalError> {
        Ok(match self.node() {
            Node::Var(v) => env.value(v).ok_or_else(|| EvalError::Unbound(v.to_string()))?,
            Node::Const(c) => c.to_f64().unwrap_or(f64::NAN),
            Node::Add(ts) => {
                let mut s = 0.0;
                for t in ts {
                    s += t.eval_raw(env)?;
                }
                s
            }
            Node::Mul(fs) => {
                let mut p = 1.0;
                for t in fs {
                    p *= t.eval_raw(env)?;
                }
                p
            }
            Node::Pow(b, n) => {
                let bv = b.eval_raw(env)?;
                if bv == 0.0 && *n < 0 {
                    return Err(EvalError::Domain(format!("division by zero in {self}")));
                }
                bv.powi(*n as i32)
            }
            Node::Div(a, b) => {
                let bv = b.eval_raw(env)?;
                if bv == 0.0 {
                    return Err(EvalError::Domain(format!("division by zero in {self}")));
                }
                a.eval_raw(env)? / bv
            }
            Node::Func(f, a) => {
                let x = a.eval_raw(env)?;
                match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Exp => x.exp(),
                    Func::Log => {
                        if x <= 0.0 {
                            return Err(EvalError::Domain(format!("log of nonpositive value {x}")));
                        }
                        x.ln()
                    }
                    Func::Sqrt => {
                        if x < 0.0 {
                            return Err(EvalError::Domain(format!("sqrt of negative value {x}")));
                        }
                        x.sqrt()
                    }
                }
            }
            Node::Table(t, k, a) => t.eval(*k, a.eval_raw(env)?),
            Node::Integral(f, v, u) => {
                let upper = u.eval_raw(env)?;
                let err = std::cell::RefCell::new(None);
                let g = |tau: f64| -> f64 {
                    let ov = Overlay { name: v, value: tau, rest: env };
                    match f.eval_raw(&ov) {
                        Ok(x) => x,
                        Err(e) => {
                            err.borrow_mut().get_or_insert(e);
                            f64::NAN
                        }
                    }
                };
                let val = adaptive_simpson(g, 0.0, upper, 1e-12);
                if let Some(e) = err.into_inner() {
                    return Err(e);
                }
                val
            }
        })
    }

    /// Exact rational evaluation; `None` when the expression leaves the rationals
    /// (elementary functions, tables, integrals) or divides by zero.
    pub fn eval_exact(&self, env: &dyn Fn(&str) -> Option<BigRational>) -> Option<BigRational> {
        Some(match self.node() {
            Node::Var(v) => env(v)?,
            Node::Const(c) => c.clone(),
            Node::Add(ts) => {
                let mut s = BigRational::zero();
                for t in ts {
                    s += t.eval_exact(env)?;
                }
                s
            }
            Node::Mul(fs) => {
                let mut p = BigRational::one();
                for t in fs {
                    p *= t.eval_exact(env)?;
                }
                p
            }
            Node::Pow(b, n) => {
                let bv = b.eval_exact(env)?;
                if bv.is_zero() && *n < 0 {
                    return None;
                }
                let base = if *n < 0 { bv.recip() } else { bv };
                let mut r = BigRational::one();
                for _ in 0..n.unsigned_abs() {
                    r *= &base;
                }
                r
            }
            Node::Div(a, b) => {
                let bv = b.eval_exact(env)?;
                if bv.is_zero() {
                    return None;
                }
                a.eval_exact(env)? / bv
            }
            Node::Func(..) | Node::Table(..) | Node::Integral(..) => return None,
        })
    }

    /// Probabilistic identity test: the expression vanishes at 20 seeded points
    /// drawn from `[-2, 2]^dim` over the given coordinates.
    pub fn is_zero_probabilistic(&self, coords: &[&str]) -> bool {
        is_zero_at_random_points(self, coords, ZERO_TEST_SEED, ZERO_TEST_POINTS)
    }

    /// Antiderivative in `x` vanishing at `x = 0`: exact for polynomials,
    /// otherwise a numeric integral node.
    pub fn antiderivative(&self, x: &str) -> Expr {
        match Poly::from_expr(self) {
            Some(p) => p.integrate(x).to_expr(),
            None => {
                let tau = format!("{x}__int");
                Expr::integral(&self.subst(x, &Expr::var(&tau)), &tau, &Expr::var(x))
            }
        }
    }

    /// Number of nodes in the tree (shared subtrees counted each time).
    pub fn size(&self) -> usize {
        match self.node() {
            Node::Var(_) | Node::Const(_) => 1,
            Node::Add(ts) | Node::Mul(ts) => 1 + ts.iter().map(Expr::size).sum::<usize>(),
            Node::Pow(b, _) => 1 + b.size(),
            Node::Div(a, b) => 1 + a.size() + b.size(),
            Node::Func(_, a) | Node::Table(_, _, a) => 1 + a.size(),
            Node::Integral(f, _, u) => 1 + f.size() + u.size(),
        }
    }
}

pub const ZERO_TEST_SEED: u64 = 0x5eed_2024;
pub const ZERO_TEST_POINTS: usize = 20;
pub const ZERO_TEST_TOL: f64 = 1e-9;

pub fn is_zero_at_random_points(e: &Expr, coords: &[&str], seed: u64, n: usize) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut evaluated = 0;
    for _ in 0..n {
        let env: HashMap<String, f64> =
            coords.iter().map(|c| (c.to_string(), rng.gen_range(-2.0..2.0))).collect();
        match e.eval(&env) {
            Ok(v) => {
                evaluated += 1;
                if v.abs() >= ZERO_TEST_TOL {
                    return false;
                }
            }
            Err(EvalError::Domain(_)) => continue,
            Err(EvalError::Unbound(_)) => return false,
        }
    }
    evaluated > 0
}

/// Adaptive Simpson quadrature with absolute tolerance.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(&f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Exact rational value of a double (every finite double is a dyadic rational).
pub fn rational_from_f64(v: f64) -> BigRational {
    BigRational::from_float(v).unwrap_or_else(BigRational::zero)
}

/// Sign of a rational as -1, 0, 1.
pub fn rational_sign(c: &BigRational) -> i32 {
    if c.is_zero() {
        0
    } else if c.is_positive() {
        1
    } else {
        -1
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        print::write_expr(self, f)
    }
}
