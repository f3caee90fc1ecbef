//! Pfaffian systems on a chart: pointwise samples and symbolic adapted frames.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::expr::{Chart, EvalError, Expr, Point};
use crate::forms::{Form, FormError, VectorField};
use crate::linalg::{self, RANK_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SystemError {
    #[error("point is off the defining level sets (residual {0:.3e})")]
    OffSurface(f64),
    #[error("level sets are singular at the point")]
    Singular,
    #[error("distribution has rank {got}, expected {want}")]
    Rank { got: usize, want: usize },
    #[error("generators and complement do not form a coframe at the point")]
    NotACoframe,
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Form(#[from] FormError),
}

/// A distribution `D = ker(generators)` on the common zero set of `level_sets`,
/// with a complement of 1-forms whose restrictions form a coframe of `D`.
#[derive(Clone, Debug)]
pub struct PfaffianSystem {
    pub name: String,
    pub chart: Arc<Chart>,
    pub level_sets: Vec<Expr>,
    pub generators: Vec<Form>,
    pub generator_labels: Vec<String>,
    pub complement: Vec<Form>,
    pub complement_labels: Vec<String>,
}

/// Pointwise data of a distribution: the annihilator, a basis of `D(w)`, and
/// the exterior derivatives of the generators restricted to `D(w)`.
#[derive(Clone, Debug)]
pub struct DistributionSample {
    pub point: Point,
    pub ambient_dim: usize,
    /// rows: differentials of level sets, then generators
    pub annihilator: DMatrix<f64>,
    pub n_level_sets: usize,
    /// columns span `D(w)`; dual to the complement when one is given
    pub basis: DMatrix<f64>,
    pub dgen: Vec<DMatrix<f64>>,
    pub generator_labels: Vec<String>,
}

impl DistributionSample {
    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    /// The restricted exterior derivatives that are not identically zero on `D(w)`.
    pub fn active_dgen(&self) -> Vec<(usize, &DMatrix<f64>)> {
        let top = self.dgen.iter().map(|m| m.norm()).fold(0.0, f64::max);
        self.dgen.iter().enumerate().filter(|(_, m)| m.norm() > 1e-9 * top.max(1e-300)).collect()
    }

    /// The vertical plane `D(w) ∩ ker(dx, dy)` in basis coordinates.
    pub fn vertical(&self) -> DMatrix<f64> {
        let ch = &self.point.chart;
        let (ix, iy) = (ch.index_of("x").expect("chart has x"), ch.index_of("y").expect("chart has y"));
        let rows = DMatrix::from_fn(2, self.rank(), |i, j| self.basis[(if i == 0 { ix } else { iy }, j)]);
        linalg::null_space(&rows, RANK_TOL)
    }

    /// Residual of the annihilator on the basis.
    pub fn kernel_residual(&self) -> f64 {
        (&self.annihilator * &self.basis).abs().max()
    }
}

/// Symbolic frame dual to (level-set differentials, generators, complement).
#[derive(Clone, Debug)]
pub struct Frames {
    /// fields spanning D, dual to the complement
    pub d_frame: Vec<VectorField>,
    /// fields dual to the generators; with `d_frame` they span the tangent space of the level set
    pub transverse: Vec<VectorField>,
}

impl PfaffianSystem {
    pub fn ambient_dim(&self) -> usize {
        self.chart.dim() - self.level_sets.len()
    }

    pub fn rank(&self) -> usize {
        self.ambient_dim() - self.generators.len()
    }

    pub fn level_differentials(&self) -> Vec<Form> {
        self.level_sets.iter().map(|f| Form::function(&self.chart, f.clone()).ext_d()).collect()
    }

    fn coframe_rows(&self) -> Vec<Form> {
        let mut rows = self.level_differentials();
        rows.extend(self.generators.iter().cloned());
        rows.extend(self.complement.iter().cloned());
        rows
    }

    /// Checks that the point lies on every level set.
    pub fn check_on_surface(&self, pt: &Point) -> Result<(), SystemError> {
        for f in &self.level_sets {
            let v = f.eval(pt)?;
            if v.abs() > 1e-9 {
                return Err(SystemError::OffSurface(v.abs()));
            }
        }
        Ok(())
    }

    pub fn sample(&self, pt: &Point) -> Result<DistributionSample, SystemError> {
        self.check_on_surface(pt)?;
        let n = self.chart.dim();
        let mut ann_rows: Vec<DVector<f64>> = Vec::new();
        for f in self.level_differentials() {
            ann_rows.push(f.eval(pt)?.covector());
        }
        let n_level = ann_rows.len();
        if n_level > 0 {
            let m = DMatrix::from_columns(&ann_rows);
            if linalg::rank(&m, RANK_TOL) < n_level {
                return Err(SystemError::Singular);
            }
        }
        for g in &self.generators {
            ann_rows.push(g.eval(pt)?.covector());
        }
        let annihilator = DMatrix::from_fn(ann_rows.len(), n, |i, j| ann_rows[i][j]);
        let want = self.rank();
        let basis = if self.complement.len() == want {
            let mut rows = ann_rows.clone();
            for c in &self.complement {
                rows.push(c.eval(pt)?.covector());
            }
            let m = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
            if rows.len() != n || linalg::rank(&m, RANK_TOL) < n {
                return Err(SystemError::NotACoframe);
            }
            let inv = m.try_inverse().ok_or(SystemError::NotACoframe)?;
            inv.columns(ann_rows.len(), want).into_owned()
        } else {
            linalg::null_space(&annihilator, RANK_TOL)
        };
        if basis.ncols() != want {
            return Err(SystemError::Rank { got: basis.ncols(), want });
        }
        let mut dgen = Vec::with_capacity(self.generators.len());
        for g in &self.generators {
            dgen.push(g.ext_d().eval(pt)?.restrict2(&basis)?);
        }
        Ok(DistributionSample {
            point: pt.clone(),
            ambient_dim: self.ambient_dim(),
            annihilator,
            n_level_sets: n_level,
            basis,
            dgen,
            generator_labels: self.generator_labels.clone(),
        })
    }

    /// Symbolic frames, by Gauss-Jordan elimination with pivots chosen at `base`.
    pub fn frames(&self, base: &Point) -> Result<Frames, SystemError> {
        let rows = self.coframe_rows();
        let n = self.chart.dim();
        if rows.len() != n {
            return Err(SystemError::NotACoframe);
        }
        let m: Vec<Vec<Expr>> = rows
            .iter()
            .map(|f| (0..n).map(|j| f.coeff(&[self.chart.name(j)])).collect())
            .collect();
        let inv = symbolic_inverse(m, base).ok_or(SystemError::NotACoframe)?;
        let column = |j: usize| VectorField { chart: self.chart.clone(), comps: (0..n).map(|i| inv[i][j].clone()).collect() };
        let nl = self.level_sets.len();
        let ng = self.generators.len();
        Ok(Frames {
            transverse: (nl..nl + ng).map(column).collect(),
            d_frame: (nl + ng..n).map(column).collect(),
        })
    }
}

/// Inverse of a square matrix of expressions; pivots are picked by magnitude at `base`
/// and structurally zero entries are skipped. `None` when singular at `base`.
pub fn symbolic_inverse(m: Vec<Vec<Expr>>, base: &Point) -> Option<Vec<Vec<Expr>>> {
    let n = m.len();
    let mut a: Vec<Vec<Expr>> = m
        .into_iter()
        .enumerate()
        .map(|(i, mut row)| {
            row.extend((0..n).map(|j| if i == j { Expr::one() } else { Expr::zero() }));
            row
        })
        .collect();
    let mut used = vec![false; n];
    let mut pivot_of_col = vec![0usize; n];
    for c in 0..n {
        // constant pivots keep the entries polynomial
        let mut best: Option<(usize, bool, f64)> = None;
        for (r, row) in a.iter().enumerate() {
            if used[r] || row[c].is_zero_const() {
                continue;
            }
            let v = row[c].eval(base).ok()?.abs();
            let k = row[c].as_const().is_some();
            if best.map_or(true, |(_, bk, b)| (k, v) > (bk, b)) {
                best = Some((r, k, v));
            }
        }
        let (r, _, v) = best?;
        if v < 1e-12 {
            return None;
        }
        used[r] = true;
        pivot_of_col[c] = r;
        let p = a[r][c].clone();
        if !p.is_one_const() {
            a[r] = a[r].iter().map(|e| e.div(&p)).collect();
        }
        let prow = a[r].clone();
        for (i, row) in a.iter_mut().enumerate() {
            if i == r || row[c].is_zero_const() {
                continue;
            }
            let k = row[c].clone();
            for j in 0..2 * n {
                if prow[j].is_zero_const() {
                    continue;
                }
                row[j] = row[j].sub(&k.mul(&prow[j]));
            }
            row[c] = Expr::zero();
        }
    }
    Some((0..n).map(|c| a[pivot_of_col[c]][n..].to_vec()).collect())
}
