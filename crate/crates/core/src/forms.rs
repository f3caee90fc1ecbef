//! Differential forms with symbolic coefficients on a single chart.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::expr::{parse_expr, Chart, Env, EvalError, Expr, ParseError};
use crate::linalg;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormError {
    #[error("forms live on different charts")]
    ChartMismatch,
    #[error("map has {got} components but the target chart has dimension {want}")]
    MapArity { got: usize, want: usize },
    #[error("degenerate basis: rank {rank} < {want}")]
    DegenerateBasis { rank: usize, want: usize },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("`{0}` is not linear in the coordinate differentials")]
    NotLinear(String),
}

/// Sorts `idx` in place; returns the permutation sign, or 0 on a repeated index.
fn sort_sign(idx: &mut [usize]) -> i32 {
    let mut sign = 1;
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if idx.windows(2).any(|w| w[0] == w[1]) {
        0
    } else {
        sign
    }
}

/// A k-form stored as a sparse map from strictly increasing index tuples to coefficients.
#[derive(Clone, Debug)]
pub struct Form {
    chart: Arc<Chart>,
    degree: usize,
    terms: BTreeMap<Vec<usize>, Expr>,
}

impl Form {
    pub fn zero(chart: &Arc<Chart>, degree: usize) -> Form {
        Form { chart: chart.clone(), degree, terms: BTreeMap::new() }
    }

    /// The 0-form given by a function.
    pub fn function(chart: &Arc<Chart>, f: Expr) -> Form {
        let mut out = Form::zero(chart, 0);
        out.insert(Vec::new(), f);
        out
    }

    /// The coordinate differential `d name`.
    pub fn d_coord(chart: &Arc<Chart>, name: &str) -> Form {
        let i = chart.index_of(name).unwrap_or_else(|| panic!("unknown coordinate {name}"));
        let mut out = Form::zero(chart, 1);
        out.insert(vec![i], Expr::one());
        out
    }

    /// Builds Σ c_i d(name_i).
    pub fn one_form(chart: &Arc<Chart>, terms: &[(&str, Expr)]) -> Form {
        let mut out = Form::zero(chart, 1);
        for (name, c) in terms {
            out = out.add(&Form::d_coord(chart, name).scale(c));
        }
        out
    }

    /// Parses a 1-form like `dz - p*dx - q*dy`; `dX` denotes the differential of coordinate `X`.
    pub fn parse_one_form(text: &str, chart: &Arc<Chart>) -> Result<Form, FormError> {
        let diffs: Vec<String> = chart.names().iter().map(|n| format!("d{n}")).collect();
        let fresh: Vec<&String> = diffs.iter().filter(|d| !chart.contains(d)).collect();
        let ext = chart.extended(&fresh).expect("differential names are fresh");
        let e = parse_expr(text, &ext)?;
        let zero_all = |x: &Expr| x.subst_map(&|n| fresh.iter().any(|d| *d == n).then(Expr::zero));
        let rest = zero_all(&e);
        let names: Vec<&str> = chart.names().iter().map(|n| &**n).collect();
        if !rest.is_zero_const() && !rest.is_zero_probabilistic(&names) {
            return Err(FormError::NotLinear(text.to_string()));
        }
        let mut out = Form::zero(chart, 1);
        for (i, name) in chart.names().iter().enumerate() {
            let dn = format!("d{name}");
            if !fresh.contains(&&dn) {
                continue;
            }
            let c = e.diff(&dn);
            if c.variables().iter().any(|v| fresh.iter().any(|d| *d == v)) {
                return Err(FormError::NotLinear(text.to_string()));
            }
            out.insert(vec![i], c);
        }
        Ok(out)
    }

    fn insert(&mut self, idx: Vec<usize>, c: Expr) {
        if c.is_zero_const() {
            return;
        }
        match self.terms.remove(&idx) {
            Some(old) => {
                let s = old.add(&c);
                if !s.is_zero_const() {
                    self.terms.insert(idx, s);
                }
            }
            None => {
                self.terms.insert(idx, c);
            }
        }
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[usize], &Expr)> {
        self.terms.iter().map(|(k, v)| (k.as_slice(), v))
    }

    /// Coefficient on the increasing tuple of coordinate names (zero when absent).
    pub fn coeff(&self, names: &[&str]) -> Expr {
        let mut idx: Vec<usize> = names.iter().map(|n| self.chart.index_of(n).expect("unknown coordinate")).collect();
        let s = sort_sign(&mut idx);
        if s == 0 {
            return Expr::zero();
        }
        let c = self.terms.get(&idx).cloned().unwrap_or_else(Expr::zero);
        if s < 0 {
            c.neg()
        } else {
            c
        }
    }

    pub fn is_structurally_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn check(&self, other: &Form) -> Result<(), FormError> {
        if self.chart == other.chart || *self.chart == *other.chart {
            Ok(())
        } else {
            Err(FormError::ChartMismatch)
        }
    }

    pub fn try_add(&self, other: &Form) -> Result<Form, FormError> {
        self.check(other)?;
        assert_eq!(self.degree, other.degree, "adding forms of different degree");
        let mut out = self.clone();
        for (k, v) in &other.terms {
            out.insert(k.clone(), v.clone());
        }
        Ok(out)
    }

    pub fn add(&self, other: &Form) -> Form {
        self.try_add(other).expect("chart mismatch")
    }

    pub fn sub(&self, other: &Form) -> Form {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Form {
        self.scale(&Expr::int(-1))
    }

    /// Multiplies every coefficient by a function.
    pub fn scale(&self, f: &Expr) -> Form {
        let mut out = Form::zero(&self.chart, self.degree);
        for (k, v) in &self.terms {
            out.insert(k.clone(), f.mul(v));
        }
        out
    }

    pub fn wedge(&self, other: &Form) -> Result<Form, FormError> {
        self.check(other)?;
        let mut out = Form::zero(&self.chart, self.degree + other.degree);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let mut idx: Vec<usize> = a.iter().chain(b.iter()).copied().collect();
                let s = sort_sign(&mut idx);
                if s == 0 {
                    continue;
                }
                let c = ca.mul(cb);
                out.insert(idx, if s < 0 { c.neg() } else { c });
            }
        }
        Ok(out)
    }

    /// Exterior derivative.
    pub fn ext_d(&self) -> Form {
        let mut out = Form::zero(&self.chart, self.degree + 1);
        for (idx, c) in &self.terms {
            for v in c.variables() {
                let Some(j) = self.chart.index_of(&v) else { continue };
                let dc = c.diff(&v);
                if dc.is_zero_const() {
                    continue;
                }
                let mut full = Vec::with_capacity(idx.len() + 1);
                full.push(j);
                full.extend_from_slice(idx);
                let s = sort_sign(&mut full);
                if s == 0 {
                    continue;
                }
                out.insert(full, if s < 0 { dc.neg() } else { dc });
            }
        }
        out
    }

    /// Pulls back along `map`, which gives each coordinate of this form's chart
    /// as an expression in the coordinates of `source`.
    pub fn pullback(&self, source: &Arc<Chart>, map: &[Expr]) -> Result<Form, FormError> {
        if map.len() != self.chart.dim() {
            return Err(FormError::MapArity { got: map.len(), want: self.chart.dim() });
        }
        let subst = |e: &Expr| {
            e.subst_map(&|n| self.chart.index_of(n).map(|i| map[i].clone()))
        };
        let mut differentials: BTreeMap<usize, Form> = BTreeMap::new();
        let mut out = Form::zero(source, self.degree);
        for (idx, c) in &self.terms {
            let mut acc = Form::function(source, subst(c));
            for i in idx {
                let di = differentials.entry(*i).or_insert_with(|| Form::function(source, map[*i].clone()).ext_d());
                acc = acc.wedge(di)?;
            }
            out = out.add(&acc);
        }
        Ok(out)
    }

    pub fn eval(&self, env: &dyn Env) -> Result<FormValue, FormError> {
        let mut comps = BTreeMap::new();
        for (k, v) in &self.terms {
            let x = v.eval(env)?;
            if x != 0.0 {
                comps.insert(k.clone(), x);
            }
        }
        Ok(FormValue { dim: self.chart.dim(), degree: self.degree, comps })
    }

    /// True when every coefficient passes the probabilistic zero test over the chart.
    pub fn is_zero_probabilistic(&self) -> bool {
        let names: Vec<&str> = self.chart.names().iter().map(|n| &**n).collect();
        self.terms.values().all(|c| c.is_zero_probabilistic(&names))
    }

    /// Substitutes expressions for coordinates in every coefficient.
    pub fn subst_coeffs(&self, f: &dyn Fn(&str) -> Option<Expr>) -> Form {
        let mut out = Form::zero(&self.chart, self.degree);
        for (k, v) in &self.terms {
            out.insert(k.clone(), v.subst_map(f));
        }
        out
    }

    /// Contraction of a 1-form with a vector field.
    pub fn apply_field(&self, x: &VectorField) -> Expr {
        assert_eq!(self.degree, 1);
        Expr::sum(self.terms.iter().map(|(k, c)| c.mul(&x.comps[k[0]])).collect())
    }

    /// Re-expresses this form on a larger chart containing every coordinate of the current one.
    pub fn lift(&self, bigger: &Arc<Chart>) -> Form {
        let mut out = Form::zero(bigger, self.degree);
        for (k, v) in &self.terms {
            let mut idx: Vec<usize> =
                k.iter().map(|i| bigger.index_of(self.chart.name(*i)).expect("coordinate missing from target chart")).collect();
            let s = sort_sign(&mut idx);
            out.insert(idx, if s < 0 { v.neg() } else { v.clone() });
        }
        out
    }
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, (k, c)) in self.terms.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            let basis: Vec<String> = k.iter().map(|i| format!("d{}", self.chart.name(*i))).collect();
            if k.is_empty() {
                write!(f, "{c}")?;
            } else {
                write!(f, "({c})*{}", basis.join("^"))?;
            }
        }
        Ok(())
    }
}

/// Pointwise value of a form.
#[derive(Clone, Debug, PartialEq)]
pub struct FormValue {
    dim: usize,
    degree: usize,
    comps: BTreeMap<Vec<usize>, f64>,
}

impl FormValue {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Covector of a 1-form value.
    pub fn covector(&self) -> DVector<f64> {
        assert_eq!(self.degree, 1);
        let mut v = DVector::zeros(self.dim);
        for (k, c) in &self.comps {
            v[k[0]] = *c;
        }
        v
    }

    /// Full antisymmetric matrix of a 2-form value.
    pub fn matrix(&self) -> DMatrix<f64> {
        assert_eq!(self.degree, 2);
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (k, c) in &self.comps {
            m[(k[0], k[1])] = *c;
            m[(k[1], k[0])] = -*c;
        }
        m
    }

    /// Evaluates on `degree` tangent vectors.
    pub fn apply(&self, vs: &[DVector<f64>]) -> f64 {
        assert_eq!(vs.len(), self.degree);
        let mut total = 0.0;
        for (k, c) in &self.comps {
            let sub = DMatrix::from_fn(self.degree, self.degree, |i, j| vs[j][k[i]]);
            total += c * sub.determinant();
        }
        total
    }

    /// Restricts a 2-form value to the span of `basis` (columns): M[i][j] = value(v_i, v_j).
    pub fn restrict2(&self, basis: &DMatrix<f64>) -> Result<DMatrix<f64>, FormError> {
        let k = basis.ncols();
        let rank = linalg::rank(basis, linalg::RANK_TOL);
        if rank < k {
            return Err(FormError::DegenerateBasis { rank, want: k });
        }
        let m = basis.transpose() * self.matrix() * basis;
        Ok(DMatrix::from_fn(k, k, |i, j| if i < j { m[(i, j)] } else if i > j { -m[(j, i)] } else { 0.0 }))
    }
}

/// Vector field with symbolic components in chart order.
#[derive(Clone, Debug)]
pub struct VectorField {
    pub chart: Arc<Chart>,
    pub comps: Vec<Expr>,
}

impl VectorField {
    pub fn zero(chart: &Arc<Chart>) -> VectorField {
        VectorField { chart: chart.clone(), comps: vec![Expr::zero(); chart.dim()] }
    }

    pub fn coordinate(chart: &Arc<Chart>, name: &str) -> VectorField {
        let mut v = VectorField::zero(chart);
        v.comps[chart.index_of(name).expect("unknown coordinate")] = Expr::one();
        v
    }

    /// Directional derivative X(f).
    pub fn apply(&self, f: &Expr) -> Expr {
        let vars = f.variables();
        Expr::sum(
            vars.iter()
                .filter_map(|v| self.chart.index_of(v).map(|i| self.comps[i].mul(&f.diff(v))))
                .collect(),
        )
    }

    pub fn bracket(&self, other: &VectorField) -> VectorField {
        VectorField {
            chart: self.chart.clone(),
            comps: (0..self.chart.dim())
                .map(|i| self.apply(&other.comps[i]).sub(&other.apply(&self.comps[i])))
                .collect(),
        }
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        VectorField { chart: self.chart.clone(), comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a.add(b)).collect() }
    }

    pub fn scale(&self, f: &Expr) -> VectorField {
        VectorField { chart: self.chart.clone(), comps: self.comps.iter().map(|a| f.mul(a)).collect() }
    }

    pub fn eval(&self, env: &dyn Env) -> Result<DVector<f64>, EvalError> {
        let mut v = DVector::zeros(self.comps.len());
        for (i, c) in self.comps.iter().enumerate() {
            v[i] = c.eval(env)?;
        }
        Ok(v)
    }
}
