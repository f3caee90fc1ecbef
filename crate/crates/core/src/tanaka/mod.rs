//! Derived and weak derived flags at a point, the filtration they induce, and
//! the graded symbol algebra with its structure constants.
//!
//! Everything is computed from brackets of the symbolic frame fields of a
//! Pfaffian system; at each step only fields independent at the point are
//! kept, which is valid wherever the ranks are locally constant.

pub mod reference;

pub use reference::{compare_symbol, reference_symbol, Reference, SymbolComparison};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::expr::{EvalError, Point, Poly};
use crate::forms::VectorField;
use crate::linalg::{self, RANK_TOL};
use crate::system::{PfaffianSystem, SystemError};

#[derive(Debug, Error)]
pub enum TanakaError {
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("frame is not dual to the coframe (pairing error {0:.3e})")]
    NonAdaptedFrame(f64),
    #[error("graded dimensions differ: {got:?} vs {want:?}")]
    Dimension { got: Vec<usize>, want: Vec<usize> },
    #[error("filtration does not fill the tangent space ({got} of {want})")]
    Incomplete { got: usize, want: usize },
}

/// Ranks of `D, ∂D, ∂²D, ∂³D` and of the weak systems `∂⁽²⁾D, ∂⁽³⁾D` at a point.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DerivedFlag {
    pub ambient_dim: usize,
    pub ranks: [usize; 4],
    pub weak_ranks: [usize; 2],
    /// some singular value sat within 10x of the rank threshold
    pub unstable: bool,
}

/// Polynomial components are brought to a canonical form to curb growth.
fn canon(v: VectorField) -> VectorField {
    let comps = v.comps.iter().map(|e| Poly::from_expr(e).map(|p| p.to_expr()).unwrap_or_else(|| e.clone())).collect();
    VectorField { chart: v.chart, comps }
}

/// Fields whose values at the point are independent, with those values.
#[derive(Clone)]
struct Span {
    fields: Vec<VectorField>,
    values: Vec<DVector<f64>>,
}

impl Span {
    fn new() -> Span {
        Span { fields: Vec::new(), values: Vec::new() }
    }

    fn dim(&self) -> usize {
        self.fields.len()
    }

    /// Adds the candidates that enlarge the span; reports near-threshold ranks.
    fn grow(&mut self, candidates: Vec<VectorField>, pt: &Point) -> Result<bool, TanakaError> {
        let mut all = self.values.clone();
        for f in candidates {
            let v = f.eval(pt)?;
            if v.norm() == 0.0 {
                continue;
            }
            all.push(v.clone());
            let mut cols = self.values.clone();
            cols.push(v.clone());
            if linalg::rank(&DMatrix::from_columns(&cols), RANK_TOL) > self.dim() {
                self.fields.push(canon(f));
                self.values.push(v);
            }
        }
        if all.is_empty() {
            return Ok(false);
        }
        Ok(linalg::rank_with_margin(&DMatrix::from_columns(&all), RANK_TOL).1)
    }
}

fn brackets(a: &[VectorField], b: &[VectorField], skip_old: usize) -> Vec<VectorField> {
    let mut out = Vec::new();
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            if std::ptr::eq(a, b) && j <= i {
                continue;
            }
            if i < skip_old && j < skip_old {
                continue;
            }
            out.push(x.bracket(y));
        }
    }
    out
}

struct Flags {
    strong: Vec<Span>,
    weak: Vec<Span>,
    unstable: bool,
}

fn flags(system: &PfaffianSystem, pt: &Point) -> Result<Flags, TanakaError> {
    let frames = system.frames(pt)?;
    let n = system.ambient_dim();
    let mut unstable = false;
    let mut d = Span::new();
    unstable |= d.grow(frames.d_frame.clone(), pt)?;
    if d.dim() != system.rank() {
        return Err(SystemError::Rank { got: d.dim(), want: system.rank() }.into());
    }
    let mut strong = vec![d.clone()];
    for _ in 0..3 {
        let prev = strong.last().unwrap().clone();
        // pairs inside the level before `prev` were bracketed already
        let old = if strong.len() > 1 { strong[strong.len() - 2].dim() } else { 0 };
        let mut next = prev.clone();
        if next.dim() < n {
            unstable |= next.grow(brackets(&prev.fields, &prev.fields, old), pt)?;
        }
        strong.push(next);
    }
    let mut weak = vec![d.clone(), strong[1].clone()];
    for _ in 0..2 {
        let prev = weak.last().unwrap().clone();
        let old = weak[weak.len() - 2].dim();
        let mut next = prev.clone();
        if next.dim() < n {
            unstable |= next.grow(brackets(&d.fields, &prev.fields[old..], 0), pt)?;
        }
        weak.push(next);
    }
    Ok(Flags { strong, weak, unstable })
}

pub fn derived_flag(system: &PfaffianSystem, pt: &Point) -> Result<DerivedFlag, TanakaError> {
    let f = flags(system, pt)?;
    Ok(DerivedFlag {
        ambient_dim: system.ambient_dim(),
        ranks: [f.strong[0].dim(), f.strong[1].dim(), f.strong[2].dim(), f.strong[3].dim()],
        weak_ranks: [f.weak[2].dim(), f.weak[3].dim()],
        unstable: f.unstable,
    })
}

/// Chain `F⁻¹ ⊂ F⁻² ⊂ F⁻³ ⊂ F⁻⁴`: `D`, `∂D`, `∂⁽²⁾D`, then the whole tangent space.
/// Each level is represented by the fields of the previous one plus new fields.
#[derive(Clone)]
pub struct Filtration {
    pub point: Point,
    /// field of each adapted basis vector
    pub fields: Vec<VectorField>,
    pub labels: Vec<String>,
    /// degree (−1 … −4) of each basis vector
    pub degrees: Vec<i32>,
    /// values of the fields at the point (columns)
    pub basis: DMatrix<f64>,
    /// `∂⁽³⁾D` already fills the tangent space
    pub weakly_generated: bool,
}

impl Filtration {
    pub fn dims(&self) -> [usize; 4] {
        let mut d = [0; 4];
        for g in &self.degrees {
            d[(-g - 1) as usize] += 1;
        }
        d
    }

    /// Columns spanning `F^p`.
    pub fn level(&self, p: i32) -> DMatrix<f64> {
        let cols: Vec<DVector<f64>> =
            self.degrees.iter().enumerate().filter(|(_, g)| **g >= p).map(|(i, _)| self.basis.column(i).into_owned()).collect();
        DMatrix::from_columns(&cols)
    }
}

pub fn filtration(system: &PfaffianSystem, pt: &Point) -> Result<Filtration, TanakaError> {
    let f = flags(system, pt)?;
    let frames = system.frames(pt)?;
    let n = system.ambient_dim();
    let mut fields = Vec::new();
    let mut labels = Vec::new();
    let mut degrees = Vec::new();
    let mut values = Vec::new();
    let mut push = |field: &VectorField, value: &DVector<f64>, label: String, g: i32| {
        fields.push(field.clone());
        values.push(value.clone());
        labels.push(label);
        degrees.push(g);
    };
    for (i, l) in system.complement_labels.iter().enumerate() {
        push(&f.weak[0].fields[i], &f.weak[0].values[i], format!("X[{l}]"), -1);
    }
    for lvl in 1..4 {
        let (lo, hi) = (f.weak[lvl - 1].dim(), f.weak[lvl].dim());
        for i in lo..hi {
            push(&f.weak[lvl].fields[i], &f.weak[lvl].values[i], format!("Y{}_{}", lvl + 1, i - lo + 1), -(lvl as i32) - 1);
        }
    }
    let weakly_generated = f.weak[3].dim() == n;
    if !weakly_generated {
        let mut top = f.weak[2].clone();
        let before = top.dim();
        top.grow(frames.transverse.clone(), pt)?;
        for i in before..top.dim() {
            push(&top.fields[i], &top.values[i], format!("T{}", i - before + 1), -4);
        }
    }
    if values.len() != n {
        return Err(TanakaError::Incomplete { got: values.len(), want: n });
    }
    Ok(Filtration { point: pt.clone(), fields, labels, degrees, basis: DMatrix::from_columns(&values), weakly_generated })
}

/// Checks that `frame` (columns) is dual to `coframe` (rows) within 1e-9.
pub fn check_adapted(coframe: &DMatrix<f64>, frame: &DMatrix<f64>) -> Result<(), TanakaError> {
    if coframe.ncols() != frame.nrows() || coframe.nrows() != frame.ncols() {
        return Err(TanakaError::NonAdaptedFrame(f64::INFINITY));
    }
    let err = (coframe * frame - DMatrix::identity(coframe.nrows(), coframe.nrows())).abs().max();
    if err > 1e-9 {
        return Err(TanakaError::NonAdaptedFrame(err));
    }
    Ok(())
}

/// A graded nilpotent Lie algebra `g₋₁ ⊕ … ⊕ g₋₄` with structure constants
/// `c[a][b][e]`: `[X_a, X_b] = Σ_e c_abe X_e`.
#[derive(Clone, Debug, Serialize)]
pub struct GradedSymbol {
    pub labels: Vec<String>,
    pub degrees: Vec<i32>,
    pub constants: Vec<Vec<Vec<f64>>>,
    /// largest component of a bracket outside its expected degree
    pub grading_residual: f64,
}

/// Symbol algebra at the filtration's point: brackets of the basis fields,
/// taken modulo the next filtration level.
pub fn symbol_algebra(filt: &Filtration) -> Result<GradedSymbol, TanakaError> {
    let n = filt.fields.len();
    let mut c = vec![vec![vec![0.0; n]; n]; n];
    let mut residual = 0.0f64;
    let svd = filt.basis.clone().svd(true, true);
    for a in 0..n {
        for b in a + 1..n {
            let target = filt.degrees[a] + filt.degrees[b];
            if target < -4 {
                continue;
            }
            let v = filt.fields[a].bracket(&filt.fields[b]).eval(&filt.point)?;
            let coords = svd.solve(&v, 1e-14).expect("svd solve");
            for e in 0..n {
                let g = filt.degrees[e];
                if g == target {
                    c[a][b][e] = coords[e];
                    c[b][a][e] = -coords[e];
                } else if g < target {
                    residual = residual.max(coords[e].abs());
                }
            }
        }
    }
    Ok(GradedSymbol { labels: filt.labels.clone(), degrees: filt.degrees.clone(), constants: c, grading_residual: residual })
}

/// Basis-independent data used to compare symbol algebras.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SymbolFingerprint {
    pub graded_dims: [usize; 4],
    /// `((p, q), dim [g_p, g_q])` for `(−1,−1), (−1,−2), (−1,−3), (−2,−2)`
    pub bracket_image_dims: Vec<((i32, i32), usize)>,
    /// `[g₋₁, g_{p+1}] = g_p` for `p = −2, −3, −4`
    pub generating_condition: [bool; 3],
    /// dimension of `{X ∈ g₋₁ : [X, g_q] = 0}` for `q = −1, −2, −3`
    pub centralizer_dims: [usize; 3],
}

pub const BRACKET_PAIRS: [(i32, i32); 4] = [(-1, -1), (-1, -2), (-1, -3), (-2, -2)];

impl GradedSymbol {
    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn graded_dims(&self) -> [usize; 4] {
        let mut d = [0; 4];
        for g in &self.degrees {
            d[(-g - 1) as usize] += 1;
        }
        d
    }

    fn of_degree(&self, p: i32) -> Vec<usize> {
        (0..self.dim()).filter(|i| self.degrees[*i] == p).collect()
    }

    pub fn index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn bracket(&self, a: usize, b: usize) -> DVector<f64> {
        DVector::from_vec(self.constants[a][b].clone())
    }

    fn scale(&self) -> f64 {
        self.constants.iter().flatten().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300)
    }

    fn rank(&self, cols: Vec<DVector<f64>>) -> usize {
        if cols.is_empty() {
            return 0;
        }
        let th = 1e-8 * self.scale();
        linalg::singular_values(&DMatrix::from_columns(&cols)).iter().filter(|s| **s > th).count()
    }

    pub fn image_dim(&self, p: i32, q: i32) -> usize {
        let mut cols = Vec::new();
        for a in self.of_degree(p) {
            for b in self.of_degree(q) {
                cols.push(self.bracket(a, b));
            }
        }
        self.rank(cols)
    }

    pub fn centralizer_dim(&self, q: i32) -> usize {
        let g1 = self.of_degree(-1);
        let gq = self.of_degree(q);
        let n = self.dim();
        // column a: concatenation of [X_a, X_b] over b in g_q
        let cols: Vec<DVector<f64>> = g1
            .iter()
            .map(|&a| DVector::from_iterator(gq.len() * n, gq.iter().flat_map(|&b| self.constants[a][b].clone())))
            .collect();
        g1.len() - self.rank(cols)
    }

    pub fn antisymmetry_residual(&self) -> f64 {
        let n = self.dim();
        let mut r = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                for e in 0..n {
                    r = r.max((self.constants[a][b][e] + self.constants[b][a][e]).abs());
                }
            }
        }
        r
    }

    /// Largest component of a bracket landing outside degree `deg a + deg b`.
    pub fn degree_residual(&self) -> f64 {
        let n = self.dim();
        let mut r = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                for e in 0..n {
                    if self.degrees[e] != self.degrees[a] + self.degrees[b] {
                        r = r.max(self.constants[a][b][e].abs());
                    }
                }
            }
        }
        r
    }

    pub fn jacobi_residual(&self) -> f64 {
        let n = self.dim();
        let br = |u: &DVector<f64>, b: usize| -> DVector<f64> {
            let mut out = DVector::zeros(n);
            for e in 0..n {
                if u[e] != 0.0 {
                    out += self.bracket(e, b) * u[e];
                }
            }
            out
        };
        let mut r = 0.0f64;
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    let j = br(&self.bracket(a, b), c) + br(&self.bracket(b, c), a) + br(&self.bracket(c, a), b);
                    r = r.max(j.abs().max());
                }
            }
        }
        r
    }

    pub fn fingerprint(&self) -> SymbolFingerprint {
        let dims = self.graded_dims();
        SymbolFingerprint {
            graded_dims: dims,
            bracket_image_dims: BRACKET_PAIRS.iter().map(|&(p, q)| ((p, q), self.image_dim(p, q))).collect(),
            generating_condition: [-2, -3, -4].map(|p: i32| self.image_dim(-1, p + 1) == dims[(-p - 1) as usize]),
            centralizer_dims: [-1, -2, -3].map(|q| self.centralizer_dim(q)),
        }
    }
}
