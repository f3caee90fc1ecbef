//! Small dense linear algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Relative singular-value threshold for all rank decisions.
pub const RANK_TOL: f64 = 1e-9;

fn svd_threshold(s: &DVector<f64>, rel: f64) -> f64 {
    let top = s.iter().fold(0.0f64, |m, v| m.max(*v));
    rel * top.max(f64::MIN_POSITIVE)
}

pub fn singular_values(m: &DMatrix<f64>) -> DVector<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return DVector::zeros(0);
    }
    m.clone().svd(false, false).singular_values
}

/// Numerical rank with threshold `rel * σ_max`; an all-zero matrix has rank 0.
pub fn rank(m: &DMatrix<f64>, rel: f64) -> usize {
    let s = singular_values(m);
    let top = s.iter().fold(0.0f64, |a, v| a.max(*v));
    if top < 1e-300 {
        return 0;
    }
    let th = svd_threshold(&s, rel);
    s.iter().filter(|v| **v > th).count()
}

/// Rank plus a flag that is set when some singular value lies within 10x of the threshold.
pub fn rank_with_margin(m: &DMatrix<f64>, rel: f64) -> (usize, bool) {
    let s = singular_values(m);
    let top = s.iter().fold(0.0f64, |a, v| a.max(*v));
    if top < 1e-300 {
        return (0, false);
    }
    let th = svd_threshold(&s, rel);
    let r = s.iter().filter(|v| **v > th).count();
    let unstable = s.iter().any(|v| *v > th / 10.0 && *v < th * 10.0 && *v != top);
    (r, unstable)
}

/// Orthonormal basis (columns) of the null space of `m`.
pub fn null_space(m: &DMatrix<f64>, rel: f64) -> DMatrix<f64> {
    let n = m.ncols();
    if m.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    // pad to at least n rows so the SVD returns a full V
    let padded = if m.nrows() < n {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("requested V");
    let s = &svd.singular_values;
    let top = s.iter().fold(0.0f64, |a, v| a.max(*v));
    let th = if top < 1e-300 { f64::INFINITY } else { rel * top };
    let cols: Vec<DVector<f64>> =
        (0..s.len()).filter(|i| !(s[*i] > th)).map(|i| vt.row(i).transpose()).collect();
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Orthonormal basis of the column space of `m`.
pub fn column_space(m: &DMatrix<f64>, rel: f64) -> DMatrix<f64> {
    let k = m.nrows();
    if m.ncols() == 0 {
        return DMatrix::zeros(k, 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let s = &svd.singular_values;
    let top = s.iter().fold(0.0f64, |a, v| a.max(*v));
    if top < 1e-300 {
        return DMatrix::zeros(k, 0);
    }
    let cols: Vec<DVector<f64>> =
        (0..s.len()).filter(|i| s[*i] > rel * top).map(|i| u.column(i).into_owned()).collect();
    if cols.is_empty() {
        DMatrix::zeros(k, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Dimension of the span of two column sets.
pub fn joint_rank(a: &DMatrix<f64>, b: &DMatrix<f64>, rel: f64) -> usize {
    let mut cols: Vec<DVector<f64>> = a.column_iter().map(|c| c.into_owned()).collect();
    cols.extend(b.column_iter().map(|c| c.into_owned()));
    if cols.is_empty() {
        return 0;
    }
    rank(&DMatrix::from_columns(&cols), rel)
}

/// Whether the column spans of `a` and `b` coincide.
pub fn same_span(a: &DMatrix<f64>, b: &DMatrix<f64>, rel: f64) -> bool {
    let ra = rank(a, rel);
    let rb = rank(b, rel);
    ra == rb && joint_rank(a, b, rel) == ra
}

/// Pfaffian of a 4x4 antisymmetric matrix.
pub fn pfaffian4(m: &DMatrix<f64>) -> f64 {
    m[(0, 1)] * m[(2, 3)] - m[(0, 2)] * m[(1, 3)] + m[(0, 3)] * m[(1, 2)]
}

/// Inertia (n+, n-, n0) of a symmetric matrix, zero band relative to the largest |eigenvalue|.
pub fn signature(m: &DMatrix<f64>, rel: f64) -> (usize, usize, usize) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let top = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let th = rel * top.max(f64::MIN_POSITIVE);
    let mut out = (0, 0, 0);
    for v in eig.eigenvalues.iter() {
        if *v > th {
            out.0 += 1;
        } else if *v < -th {
            out.1 += 1;
        } else {
            out.2 += 1;
        }
    }
    out
}

/// Eigenvectors of a symmetric matrix for eigenvalues inside the zero band.
pub fn symmetric_kernel(m: &DMatrix<f64>, rel: f64) -> DMatrix<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let top = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let th = rel * top.max(f64::MIN_POSITIVE);
    let cols: Vec<DVector<f64>> = (0..eig.eigenvalues.len())
        .filter(|i| eig.eigenvalues[*i].abs() <= th)
        .map(|i| eig.eigenvectors.column(i).into_owned())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(m.nrows(), 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Least-squares coordinates of `v` in the columns of `basis`.
pub fn solve_in_basis(basis: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    let svd = basis.clone().svd(true, true);
    svd.solve(v, 1e-14).expect("svd solve")
}

/// Extends the orthonormal columns of `sub` by vectors from `candidates`, greedily.
pub fn extend_basis(sub: &DMatrix<f64>, candidates: &[DVector<f64>], want: usize, rel: f64) -> Vec<usize> {
    let mut cols: Vec<DVector<f64>> = sub.column_iter().map(|c| c.into_owned()).collect();
    let mut picked = Vec::new();
    let mut r = if cols.is_empty() { 0 } else { rank(&DMatrix::from_columns(&cols), rel) };
    for (i, c) in candidates.iter().enumerate() {
        if picked.len() == want {
            break;
        }
        cols.push(c.clone());
        let nr = rank(&DMatrix::from_columns(&cols), rel);
        if nr > r {
            r = nr;
            picked.push(i);
        } else {
            cols.pop();
        }
    }
    picked
}
